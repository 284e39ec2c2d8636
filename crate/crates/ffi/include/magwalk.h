#ifndef MAGWALK_H
#define MAGWALK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  MW_STATUS_OK = 0,
  MW_STATUS_NULL_POINTER = 1,
  MW_STATUS_INVALID_ARGUMENT = 2,
  MW_STATUS_VALIDATION = 3,
  MW_STATUS_CAPACITY = 4,
  MW_STATUS_NUMERICAL = 5,
  MW_STATUS_IO = 6,
  MW_STATUS_BUFFER_TOO_SMALL = 7,
  MW_STATUS_PANIC = 8,
} MwStatus;

typedef struct MwCoin MwCoin;

typedef struct MwPotential MwPotential;

typedef struct MwWalk MwWalk;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t mw_last_error_message(char *buf, size_t len);

/**
 * # Safety
 * `out` must be valid for writing one pointer.
 */
MwStatus mw_coin_grover(size_t n, MwCoin **out);

/**
 * # Safety
 * `out` must be valid for writing one pointer.
 */
MwStatus mw_coin_hadamard_partition(size_t n, MwCoin **out);

/**
 * # Safety
 * `out` must be valid for writing one pointer.
 */
MwStatus mw_coin_random(size_t n, size_t d, uint64_t seed, MwCoin **out);

/**
 * Parses and validates a coin system from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` valid for one pointer.
 */
MwStatus mw_coin_from_json(const char *json, MwCoin **out);

/**
 * # Safety
 * `coin` must be a live handle or null.
 */
size_t mw_coin_n(const MwCoin *coin);

/**
 * # Safety
 * `coin` must be a live handle or null.
 */
size_t mw_coin_d(const MwCoin *coin);

/**
 * # Safety
 * `coin` must come from an `mw_coin_*` constructor and not be used afterwards.
 */
void mw_coin_free(MwCoin *coin);

/**
 * Builds a potential from `n+1` phases in `[−π, π]`.
 *
 * # Safety
 * `phases` must be valid for `len` doubles; `out` valid for one pointer.
 */
MwStatus mw_potential_new(const double *phases, size_t len, MwPotential **out);

/**
 * # Safety
 * `out` must be valid for writing one pointer.
 */
MwStatus mw_potential_null(size_t n, MwPotential **out);

/**
 * # Safety
 * `potential` must come from an `mw_potential_*` constructor and not be used afterwards.
 */
void mw_potential_free(MwPotential *potential);

/**
 * Assembles the walk operator. The handle owns copies of both inputs.
 *
 * # Safety
 * Handles must be live; `out` valid for one pointer.
 */
MwStatus mw_walk_new(const MwPotential *potential, const MwCoin *coin, MwWalk **out);

/**
 * State dimension `2^(n+1)·d`, or 0 for a null handle.
 *
 * # Safety
 * `walk` must be a live handle or null.
 */
size_t mw_walk_dimension(const MwWalk *walk);

/**
 * # Safety
 * `walk` must come from `mw_walk_new` and not be used afterwards.
 */
void mw_walk_free(MwWalk *walk);

/**
 * Applies `steps` walk steps to `input`, writing to `output`. Both buffers
 * hold `len = 2·dimension` interleaved doubles and may alias. The input need
 * not be normalized.
 *
 * # Safety
 * Buffers must be valid for `len` doubles.
 */
MwStatus mw_walk_evolve(const MwWalk *walk,
                        const double *input,
                        double *output,
                        size_t len,
                        uint64_t steps);

/**
 * One walk step; see [`mw_walk_evolve`].
 *
 * # Safety
 * Buffers must be valid for `len` doubles.
 */
MwStatus mw_walk_step(const MwWalk *walk, const double *input, double *output, size_t len);

/**
 * Distinct eigenvalues of the walk operator, sorted by argument. Writes up
 * to `capacity` values as interleaved `re, im` into `values` (2·capacity
 * doubles) and their multiplicities into `multiplicities`. `count` receives
 * the number of distinct eigenvalues; `MW_STATUS_BUFFER_TOO_SMALL` is
 * returned when it exceeds `capacity`.
 *
 * # Safety
 * `values` valid for `2·capacity` doubles, `multiplicities` for `capacity`
 * entries, `count` for one `size_t`.
 */
MwStatus mw_walk_point_spectrum(const MwWalk *walk,
                                double *values,
                                size_t *multiplicities,
                                size_t capacity,
                                size_t *count);

/**
 * Compares the walk spectrum with the union of the signed coin-sum spectra.
 * `passed` receives 1 or 0, `hausdorff` the set distance.
 *
 * # Safety
 * Handles must be live; output pointers valid for one value each.
 */
MwStatus mw_verify_point_spectrum(const MwPotential *potential,
                                  const MwCoin *coin,
                                  double tolerance,
                                  int *passed,
                                  double *hausdorff);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MAGWALK_H */
