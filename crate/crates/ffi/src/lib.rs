//! C ABI over `magwalk`.
//!
//! Objects are opaque heap handles released with their `*_free` function.
//! Every fallible call returns an [`MwStatus`]; on failure the message is
//! available from [`mw_last_error_message`] on the same thread. Complex
//! vectors cross the boundary as interleaved `re, im` doubles, so a state of
//! dimension `N` occupies `2N` doubles.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use magwalk::coin::{grover_coin_system, hadamard_partition_coin_system, random_coin_system, CoinSystem};
use magwalk::linalg::{StateVector, C64};
use magwalk::magnetic::MagneticPotential;
use magwalk::spectra::{verify_point_spectrum_theorem, walk_point_spectrum};
use magwalk::walk::{evolution_operator, evolve, WalkOperator, WalkState};
use magwalk::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Validation = 3,
    Capacity = 4,
    Numerical = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

pub struct MwCoin(CoinSystem);
pub struct MwPotential(MagneticPotential);
pub struct MwWalk(WalkOperator);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> MwStatus {
    match err {
        Error::InvalidArgument(_) => MwStatus::InvalidArgument,
        Error::Validation(_) => MwStatus::Validation,
        Error::Capacity { .. } => MwStatus::Capacity,
        Error::Numerical(_) => MwStatus::Numerical,
        Error::Io(_) | Error::Json(_) => MwStatus::Io,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (MwStatus, String)>) -> MwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MwStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MwStatus::Panic
        }
    }
}

fn lib<T>(r: magwalk::Result<T>) -> Result<T, (MwStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null_err(what: &str) -> (MwStatus, String) {
    (MwStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (MwStatus, String)> {
    p.as_ref().ok_or_else(|| null_err(what))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), (MwStatus, String)> {
    if out.is_null() {
        return Err(null_err("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn read_state(data: *const f64, len: usize, dim: usize) -> Result<StateVector, (MwStatus, String)> {
    if data.is_null() {
        return Err(null_err("input buffer"));
    }
    if len != 2 * dim {
        return Err((MwStatus::InvalidArgument, format!("buffer holds {len} doubles, expected {}", 2 * dim)));
    }
    let raw = std::slice::from_raw_parts(data, len);
    Ok(StateVector(raw.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect()))
}

unsafe fn write_state(v: &[C64], out: *mut f64, len: usize) -> Result<(), (MwStatus, String)> {
    if out.is_null() {
        return Err(null_err("output buffer"));
    }
    if len != 2 * v.len() {
        return Err((MwStatus::BufferTooSmall, format!("buffer holds {len} doubles, need {}", 2 * v.len())));
    }
    let dst = std::slice::from_raw_parts_mut(out, len);
    for (pair, z) in dst.chunks_exact_mut(2).zip(v) {
        pair[0] = z.re;
        pair[1] = z.im;
    }
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn mw_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_coin_grover(n: usize, out: *mut *mut MwCoin) -> MwStatus {
    guard(|| emit(out, MwCoin(lib(grover_coin_system(n))?)))
}

/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_coin_hadamard_partition(n: usize, out: *mut *mut MwCoin) -> MwStatus {
    guard(|| emit(out, MwCoin(lib(hadamard_partition_coin_system(n))?)))
}

/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_coin_random(n: usize, d: usize, seed: u64, out: *mut *mut MwCoin) -> MwStatus {
    guard(|| emit(out, MwCoin(lib(random_coin_system(n, d, seed))?)))
}

/// Parses and validates a coin system from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` valid for one pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_coin_from_json(json: *const c_char, out: *mut *mut MwCoin) -> MwStatus {
    guard(|| {
        if json.is_null() {
            return Err(null_err("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (MwStatus::InvalidArgument, format!("json is not UTF-8: {e}")))?;
        emit(out, MwCoin(lib(CoinSystem::from_json(text))?))
    })
}

/// # Safety
/// `coin` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn mw_coin_n(coin: *const MwCoin) -> usize {
    coin.as_ref().map_or(0, |c| c.0.n())
}

/// # Safety
/// `coin` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn mw_coin_d(coin: *const MwCoin) -> usize {
    coin.as_ref().map_or(0, |c| c.0.d())
}

/// # Safety
/// `coin` must come from an `mw_coin_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mw_coin_free(coin: *mut MwCoin) {
    if !coin.is_null() {
        drop(Box::from_raw(coin));
    }
}

/// Builds a potential from `n+1` phases in `[−π, π]`.
///
/// # Safety
/// `phases` must be valid for `len` doubles; `out` valid for one pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_potential_new(phases: *const f64, len: usize, out: *mut *mut MwPotential) -> MwStatus {
    guard(|| {
        if phases.is_null() {
            return Err(null_err("phases"));
        }
        let p = std::slice::from_raw_parts(phases, len).to_vec();
        emit(out, MwPotential(lib(MagneticPotential::new(p))?))
    })
}

/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_potential_null(n: usize, out: *mut *mut MwPotential) -> MwStatus {
    guard(|| emit(out, MwPotential(MagneticPotential::null(n))))
}

/// # Safety
/// `potential` must come from an `mw_potential_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mw_potential_free(potential: *mut MwPotential) {
    if !potential.is_null() {
        drop(Box::from_raw(potential));
    }
}

/// Assembles the walk operator. The handle owns copies of both inputs.
///
/// # Safety
/// Handles must be live; `out` valid for one pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_walk_new(
    potential: *const MwPotential,
    coin: *const MwCoin,
    out: *mut *mut MwWalk,
) -> MwStatus {
    guard(|| {
        let nu = &deref(potential, "potential")?.0;
        let cs = &deref(coin, "coin")?.0;
        emit(out, MwWalk(lib(evolution_operator(nu, cs))?))
    })
}

/// State dimension `2^(n+1)·d`, or 0 for a null handle.
///
/// # Safety
/// `walk` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn mw_walk_dimension(walk: *const MwWalk) -> usize {
    walk.as_ref().map_or(0, |w| w.0.dim())
}

/// # Safety
/// `walk` must come from `mw_walk_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mw_walk_free(walk: *mut MwWalk) {
    if !walk.is_null() {
        drop(Box::from_raw(walk));
    }
}

/// Applies `steps` walk steps to `input`, writing to `output`. Both buffers
/// hold `len = 2·dimension` interleaved doubles and may alias. The input need
/// not be normalized.
///
/// # Safety
/// Buffers must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mw_walk_evolve(
    walk: *const MwWalk,
    input: *const f64,
    output: *mut f64,
    len: usize,
    steps: u64,
) -> MwStatus {
    guard(|| {
        let op = &deref(walk, "walk")?.0;
        let v = read_state(input, len, op.dim())?;
        let mut state = v.0;
        if steps > 0 {
            // evolve() requires a unit vector; rescale around it
            let norm = StateVector(state.clone()).norm();
            if norm == 0.0 {
                state = vec![C64::new(0.0, 0.0); op.dim()];
            } else {
                let unit = StateVector(state).scaled(C64::new(norm.recip(), 0.0));
                let start = lib(WalkState::new(op.n(), op.d(), unit))?;
                let end = lib(evolve(op, &start, steps))?;
                state = end.vector.scaled(C64::new(norm, 0.0)).0;
            }
        }
        write_state(&state, output, len)
    })
}

/// One walk step; see [`mw_walk_evolve`].
///
/// # Safety
/// Buffers must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mw_walk_step(walk: *const MwWalk, input: *const f64, output: *mut f64, len: usize) -> MwStatus {
    guard(|| {
        let op = &deref(walk, "walk")?.0;
        let v = read_state(input, len, op.dim())?;
        write_state(&op.apply(&v), output, len)
    })
}

/// Distinct eigenvalues of the walk operator, sorted by argument. Writes up
/// to `capacity` values as interleaved `re, im` into `values` (2·capacity
/// doubles) and their multiplicities into `multiplicities`. `count` receives
/// the number of distinct eigenvalues; `MW_STATUS_BUFFER_TOO_SMALL` is
/// returned when it exceeds `capacity`.
///
/// # Safety
/// `values` valid for `2·capacity` doubles, `multiplicities` for `capacity`
/// entries, `count` for one `size_t`.
#[no_mangle]
pub unsafe extern "C" fn mw_walk_point_spectrum(
    walk: *const MwWalk,
    values: *mut f64,
    multiplicities: *mut usize,
    capacity: usize,
    count: *mut usize,
) -> MwStatus {
    guard(|| {
        let op = &deref(walk, "walk")?.0;
        if count.is_null() {
            return Err(null_err("count"));
        }
        let spec = lib(walk_point_spectrum(op.potential(), op.coin()))?;
        *count = spec.eigenvalues.len();
        if spec.eigenvalues.len() > capacity {
            return Err((
                MwStatus::BufferTooSmall,
                format!("{} eigenvalues, capacity {capacity}", spec.eigenvalues.len()),
            ));
        }
        if values.is_null() || multiplicities.is_null() {
            return Err(null_err("output buffer"));
        }
        let vals = std::slice::from_raw_parts_mut(values, 2 * capacity);
        let mults = std::slice::from_raw_parts_mut(multiplicities, capacity);
        for (k, e) in spec.eigenvalues.iter().enumerate() {
            vals[2 * k] = e.value.re;
            vals[2 * k + 1] = e.value.im;
            mults[k] = e.multiplicity;
        }
        Ok(())
    })
}

/// Compares the walk spectrum with the union of the signed coin-sum spectra.
/// `passed` receives 1 or 0, `hausdorff` the set distance.
///
/// # Safety
/// Handles must be live; output pointers valid for one value each.
#[no_mangle]
pub unsafe extern "C" fn mw_verify_point_spectrum(
    potential: *const MwPotential,
    coin: *const MwCoin,
    tolerance: f64,
    passed: *mut c_int,
    hausdorff: *mut f64,
) -> MwStatus {
    guard(|| {
        let nu = &deref(potential, "potential")?.0;
        let cs = &deref(coin, "coin")?.0;
        if passed.is_null() || hausdorff.is_null() {
            return Err(null_err("output"));
        }
        let check = lib(verify_point_spectrum_theorem(nu, cs, tolerance))?;
        *passed = c_int::from(check.passed);
        *hausdorff = check.hausdorff_distance;
        Ok(())
    })
}
