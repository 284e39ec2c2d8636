//! Coin operator systems on a finite coin space `K = ℂ^d`.
//!
//! A system `{C_0,…,C_n}` is valid when `C_j*C_k = C_jC_k* = 0` for `j ≠ k`
//! and `S = ∑_j C_j` is unitary. Every valid system has the normal form
//! `C_j = S·Q_j` with `Q_j = S*C_j` orthogonal projections summing to `I`, so
//! the constructors here all go through a unitary and a partition of the
//! coordinate indices.

use faer::Mat;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::SubsetIndex;
use crate::linalg::{max_abs_dense, OperatorMatrix, C64, ONE, ZERO};

/// Tolerance for the coin-system identities and for unitarity of `U_σ`.
pub const COIN_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct CoinSystem {
    n: usize,
    d: usize,
    ops: Vec<Mat<C64>>,
}

/// Residuals of the defining identities of a coin system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoinReport {
    pub n: usize,
    pub d: usize,
    /// `max_{j≠k} ‖C_j*C_k‖_max`
    pub adjoint_left_residual: f64,
    /// `max_{j≠k} ‖C_jC_k*‖_max`
    pub adjoint_right_residual: f64,
    /// `‖S*S − I‖_max` for `S = ∑_j C_j`
    pub sum_unitarity_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CoinReport {
    pub fn max_residual(&self) -> f64 {
        self.adjoint_left_residual
            .max(self.adjoint_right_residual)
            .max(self.sum_unitarity_residual)
    }
}

#[derive(Serialize, Deserialize)]
struct CoinDocument {
    n: usize,
    d: usize,
    ops: Vec<Vec<[f64; 2]>>,
}

impl CoinSystem {
    /// Checks shapes only: `n + 1` square matrices of a common size `d ≥ n + 1`.
    /// Use [`CoinSystem::validated`] or [`CoinSystem::validate`] for the algebra.
    pub fn new(n: usize, ops: Vec<Mat<C64>>) -> Result<Self> {
        if ops.len() != n + 1 {
            return Err(Error::arg(format!(
                "a coin system for n = {n} needs {} operators, got {}",
                n + 1,
                ops.len()
            )));
        }
        let d = ops[0].nrows();
        for (j, c) in ops.iter().enumerate() {
            if c.nrows() != d || c.ncols() != d {
                return Err(Error::arg(format!(
                    "coin operator C_{j} is {}x{}, expected {d}x{d}",
                    c.nrows(),
                    c.ncols()
                )));
            }
        }
        if d < n + 1 {
            return Err(Error::arg(format!(
                "coin dimension d = {d} is below the required n + 1 = {}",
                n + 1
            )));
        }
        Ok(CoinSystem { n, d, ops })
    }

    /// Shape checks plus the coin-system identities at [`COIN_TOL`].
    pub fn validated(n: usize, ops: Vec<Mat<C64>>) -> Result<Self> {
        let cs = Self::new(n, ops)?;
        cs.ensure_valid()?;
        Ok(cs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn ops(&self) -> &[Mat<C64>] {
        &self.ops
    }

    pub fn op(&self, j: usize) -> &Mat<C64> {
        &self.ops[j]
    }

    /// `S = ∑_j C_j`.
    pub fn sum(&self) -> Mat<C64> {
        let mut s = Mat::<C64>::zeros(self.d, self.d);
        for c in &self.ops {
            s += c;
        }
        s
    }

    pub fn validate(&self) -> CoinReport {
        let mut left = 0.0f64;
        let mut right = 0.0f64;
        for j in 0..=self.n {
            for k in 0..=self.n {
                if j == k {
                    continue;
                }
                let (cj, ck) = (&self.ops[j], &self.ops[k]);
                left = left.max(max_abs_dense(&(cj.adjoint() * ck)));
                right = right.max(max_abs_dense(&(cj * ck.adjoint())));
            }
        }
        let unitarity = OperatorMatrix::from(self.sum()).unitarity_residual();
        let passed = left <= COIN_TOL && right <= COIN_TOL && unitarity <= COIN_TOL;
        CoinReport {
            n: self.n,
            d: self.d,
            adjoint_left_residual: left,
            adjoint_right_residual: right,
            sum_unitarity_residual: unitarity,
            tolerance: COIN_TOL,
            passed,
        }
    }

    pub fn ensure_valid(&self) -> Result<CoinReport> {
        let report = self.validate();
        if !report.passed {
            return Err(Error::Validation(format!(
                "not a coin operator system: max residual {:.3e} exceeds {COIN_TOL:e} \
                 (C_j*C_k {:.3e}, C_jC_k* {:.3e}, sum unitarity {:.3e})",
                report.max_residual(),
                report.adjoint_left_residual,
                report.adjoint_right_residual,
                report.sum_unitarity_residual
            )));
        }
        Ok(report)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CoinDocument = serde_json::from_str(text)?;
        let d = doc.d;
        let ops = doc
            .ops
            .iter()
            .enumerate()
            .map(|(j, entries)| {
                if entries.len() != d * d {
                    return Err(Error::arg(format!(
                        "operator {j} has {} entries, expected d*d = {}",
                        entries.len(),
                        d * d
                    )));
                }
                Ok(Mat::from_fn(d, d, |r, c| {
                    let [re, im] = entries[r * d + c];
                    C64::new(re, im)
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        if ops.is_empty() {
            return Err(Error::arg("coin document has no operators"));
        }
        Self::validated(doc.n, ops)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = CoinDocument {
            n: self.n,
            d: self.d,
            ops: self
                .ops
                .iter()
                .map(|c| {
                    (0..self.d)
                        .flat_map(|r| (0..self.d).map(move |col| (r, col)))
                        .map(|(r, col)| [c[(r, col)].re, c[(r, col)].im])
                        .collect()
                })
                .collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }
}

pub fn validate_coin_system(cs: &CoinSystem) -> CoinReport {
    cs.validate()
}

/// `C_j = S·P_j` where `P_j` projects onto the coordinates in `partition[j]`.
pub fn coin_from_unitary_partition(s: &Mat<C64>, partition: &[Vec<usize>]) -> Result<CoinSystem> {
    let d = s.nrows();
    if s.ncols() != d {
        return Err(Error::arg("coin unitary must be square"));
    }
    let residual = OperatorMatrix::from(s.clone()).unitarity_residual();
    if residual > COIN_TOL {
        return Err(Error::arg(format!(
            "coin unitary has unitarity residual {residual:.3e} > {COIN_TOL:e}"
        )));
    }
    if partition.is_empty() {
        return Err(Error::arg("partition must have at least one block"));
    }
    let mut owner = vec![None; d];
    for (j, block) in partition.iter().enumerate() {
        if block.is_empty() {
            return Err(Error::arg(format!("partition block {j} is empty")));
        }
        for &i in block {
            match owner.get(i) {
                None => return Err(Error::arg(format!("partition index {i} outside 0..{d}"))),
                Some(Some(prev)) => {
                    return Err(Error::arg(format!(
                        "partition index {i} appears in blocks {prev} and {j}"
                    )))
                }
                Some(None) => owner[i] = Some(j),
            }
        }
    }
    if let Some(i) = owner.iter().position(Option::is_none) {
        return Err(Error::arg(format!("partition does not cover index {i}")));
    }
    let ops = (0..partition.len())
        .map(|j| Mat::from_fn(d, d, |r, c| if owner[c] == Some(j) { s[(r, c)] } else { ZERO }))
        .collect();
    CoinSystem::validated(partition.len() - 1, ops)
}

/// Splits `0..d` into `parts` contiguous blocks whose sizes differ by at most one.
pub fn balanced_partition(d: usize, parts: usize) -> Vec<Vec<usize>> {
    let (base, extra) = (d / parts, d % parts);
    let mut start = 0;
    (0..parts)
        .map(|j| {
            let len = base + usize::from(j < extra);
            let block = (start..start + len).collect();
            start += len;
            block
        })
        .collect()
}

/// Grover diffusion `2/(n+1)·J − I` on `d = n + 1` with singleton partition.
pub fn grover_coin_system(n: usize) -> Result<CoinSystem> {
    let d = n + 1;
    let s = grover_matrix(d);
    let partition: Vec<Vec<usize>> = (0..d).map(|i| vec![i]).collect();
    coin_from_unitary_partition(&s, &partition)
}

pub fn grover_matrix(d: usize) -> Mat<C64> {
    let off = 2.0 / d as f64;
    Mat::from_fn(d, d, |r, c| C64::new(if r == c { off - 1.0 } else { off }, 0.0))
}

/// Normalized Sylvester–Hadamard matrix of size `2^m`.
pub fn hadamard_matrix(m: u32) -> Mat<C64> {
    let d = 1usize << m;
    let scale = (d as f64).sqrt().recip();
    Mat::from_fn(d, d, |r, c| {
        let sign = if (r & c).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        C64::new(sign * scale, 0.0)
    })
}

/// Hadamard unitary of the smallest power-of-two size `d ≥ max(n + 1, 2)`,
/// split into balanced contiguous blocks. For `n = 1` this is the 2×2
/// Hadamard with partition `({0}, {1})`.
pub fn hadamard_partition_coin_system(n: usize) -> Result<CoinSystem> {
    let d = (n + 1).max(2).next_power_of_two();
    let s = hadamard_matrix(d.trailing_zeros());
    coin_from_unitary_partition(&s, &balanced_partition(d, n + 1))
}

/// Haar-distributed `d × d` unitary: Gram–Schmidt on a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Mat<C64> {
    let mut cols: Vec<Vec<C64>> = (0..d)
        .map(|_| {
            (0..d)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    C64::new(re, im)
                })
                .collect()
        })
        .collect();
    for k in 0..d {
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for prev in 0..k {
                let proj: C64 = cols[prev].iter().zip(&cols[k]).map(|(a, b)| a.conj() * b).sum();
                let (head, tail) = cols.split_at_mut(k);
                for (x, q) in tail[0].iter_mut().zip(&head[prev]) {
                    *x -= proj * q;
                }
            }
        }
        let norm = cols[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in &mut cols[k] {
            *x /= norm;
        }
    }
    Mat::from_fn(d, d, |r, c| cols[c][r])
}

/// Seeded random coin system: random unitary with a random balanced partition.
pub fn random_coin_system(n: usize, d: usize, seed: u64) -> Result<CoinSystem> {
    if d < n + 1 {
        return Err(Error::arg(format!(
            "coin dimension d = {d} is below the required n + 1 = {}",
            n + 1
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = random_unitary(d, &mut rng);
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(&mut rng);
    let mut partition = vec![Vec::new(); n + 1];
    for (i, &idx) in perm.iter().enumerate() {
        partition[i % (n + 1)].push(idx);
    }
    for block in &mut partition {
        block.sort_unstable();
    }
    coin_from_unitary_partition(&s, &partition)
}

/// `U_σ = ∑_j E_σ(j) C_j`.
pub fn algebraic_sum(cs: &CoinSystem, sigma: SubsetIndex) -> Result<Mat<C64>> {
    if !sigma.is_within(cs.n) {
        return Err(Error::arg(format!(
            "subset {sigma:?} is not contained in {{0,…,{}}}",
            cs.n
        )));
    }
    let mut u = Mat::<C64>::zeros(cs.d, cs.d);
    for (j, c) in cs.ops.iter().enumerate() {
        let e = C64::new(sigma.sign(j), 0.0);
        u += Mat::from_fn(cs.d, cs.d, |r, col| c[(r, col)] * e);
    }
    Ok(u)
}

/// Identity coin `C_0 = I_d` for `n = 0`.
pub fn identity_coin_system(d: usize) -> Result<CoinSystem> {
    CoinSystem::validated(0, vec![Mat::from_fn(d, d, |r, c| if r == c { ONE } else { ZERO })])
}
