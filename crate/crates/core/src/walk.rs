//! The evolution operator `W^(ν) = ∑_j Ξ_j^(ν) ⊗ C_j` on `h_n ⊗ K` and the
//! walk dynamics it drives.
//!
//! Composite index convention: `fock_index * d + coin_index`.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::coin::{algebraic_sum, CoinSystem};
use crate::error::{Error, Result};
use crate::fock::{creation_operator, annihilation_operator, FockSpace, SubsetIndex};
use crate::linalg::{CsrMatrix, OperatorMatrix, StateVector, C64, ZERO};
use crate::magnetic::{magnetic_basis_vector, MagneticPotential};

/// Largest matrix side that may be materialized densely.
pub const DENSE_DIM_LIMIT: usize = 22_528;

/// Nonzero columns of one coin operator, stored row-major over those columns.
#[derive(Clone, Debug)]
struct CoinKernel {
    cols: Vec<usize>,
    /// `entries[r * cols.len() + k] = C[(r, cols[k])]`
    entries: Vec<C64>,
}

impl CoinKernel {
    fn new(c: &Mat<C64>) -> Self {
        let d = c.nrows();
        let cols: Vec<usize> = (0..d)
            .filter(|&col| (0..d).any(|r| c[(r, col)] != ZERO))
            .collect();
        let mut entries = Vec::with_capacity(d * cols.len());
        for r in 0..d {
            entries.extend(cols.iter().map(|&col| c[(r, col)]));
        }
        CoinKernel { cols, entries }
    }

    /// `out += phase · C · x`, using `scratch` for the gathered input.
    #[inline]
    fn accumulate(&self, phase: C64, x: &[C64], out: &mut [C64], scratch: &mut Vec<C64>) {
        let w = self.cols.len();
        if w == 0 {
            return;
        }
        scratch.clear();
        scratch.extend(self.cols.iter().map(|&c| x[c]));
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.entries[r * w..(r + 1) * w];
            let acc: C64 = row.iter().zip(scratch.iter()).map(|(a, b)| a * b).sum();
            *o += phase * acc;
        }
    }
}

#[derive(Clone, Debug)]
enum Assembly {
    /// Built from the magnetic shifts `Ξ_j^(ν)`.
    Shifts,
    /// Built from the ladder form `∑_k (∂_k* + ∂_k) ⊗ C_k`.
    Ladder(CsrMatrix),
}

#[derive(Clone, Debug)]
pub struct WalkOperator {
    nu: MagneticPotential,
    coin: CoinSystem,
    kernels: Vec<CoinKernel>,
    assembly: Assembly,
}

impl WalkOperator {
    pub fn n(&self) -> usize {
        self.coin.n()
    }

    pub fn d(&self) -> usize {
        self.coin.d()
    }

    pub fn fock_dim(&self) -> usize {
        1 << (self.n() + 1)
    }

    pub fn dim(&self) -> usize {
        self.fock_dim() * self.d()
    }

    pub fn potential(&self) -> &MagneticPotential {
        &self.nu
    }

    pub fn coin(&self) -> &CoinSystem {
        &self.coin
    }

    /// Matrix-free `W·x`: for each direction `j` and vertex `σ`, move the coin
    /// block of `σ` to `σ △ {j}` through `C_j` with the shift phase.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.dim(), "walk apply dimension mismatch");
        let d = self.d();
        let mut out = vec![ZERO; x.len()];
        let mut scratch = Vec::with_capacity(d);
        for (j, kernel) in self.kernels.iter().enumerate() {
            for s in 0..self.fock_dim() {
                let sigma = SubsetIndex::new(s as u32);
                let t = sigma.toggle(j).index();
                let phase = self.nu.shift_factor(sigma, j);
                kernel.accumulate(phase, &x[s * d..(s + 1) * d], &mut out[t * d..(t + 1) * d], &mut scratch);
            }
        }
        out
    }

    /// Sparse assembly of the full operator.
    pub fn to_sparse(&self) -> CsrMatrix {
        if let Assembly::Ladder(m) = &self.assembly {
            return m.clone();
        }
        let d = self.d();
        let mut trips = Vec::new();
        for j in 0..=self.n() {
            let c = self.coin.op(j);
            for s in 0..self.fock_dim() {
                let sigma = SubsetIndex::new(s as u32);
                let t = sigma.toggle(j).index();
                let phase = self.nu.shift_factor(sigma, j);
                for r in 0..d {
                    for col in 0..d {
                        let v = c[(r, col)];
                        if v != ZERO {
                            trips.push((t * d + r, s * d + col, phase * v));
                        }
                    }
                }
            }
        }
        CsrMatrix::from_triplets(self.dim(), self.dim(), trips).expect("indices in range")
    }

    pub fn to_operator(&self) -> OperatorMatrix {
        self.to_sparse().into()
    }

    /// Dense materialization, refused above [`DENSE_DIM_LIMIT`].
    pub fn to_dense(&self) -> Result<Mat<C64>> {
        check_dense_capacity(self.dim())?;
        Ok(self.to_sparse().to_dense())
    }

    pub fn unitarity_residual(&self) -> f64 {
        self.to_operator().unitarity_residual()
    }
}

pub(crate) fn check_dense_capacity(dim: usize) -> Result<()> {
    if dim > DENSE_DIM_LIMIT {
        return Err(Error::Capacity {
            what: "dense walk operator",
            requested: dim,
            limit: DENSE_DIM_LIMIT,
            hint: "use the coin-union spectrum (2^(n+1) independent d x d solves) instead",
        });
    }
    Ok(())
}

/// `W^(ν) = ∑_j Ξ_j^(ν) ⊗ C_j`. The coin system is re-validated.
pub fn evolution_operator(nu: &MagneticPotential, cs: &CoinSystem) -> Result<WalkOperator> {
    if nu.n() != cs.n() {
        return Err(Error::arg(format!(
            "potential is for n = {} but coin system is for n = {}",
            nu.n(),
            cs.n()
        )));
    }
    FockSpace::new(cs.n())?;
    cs.ensure_valid()?;
    Ok(WalkOperator {
        nu: nu.clone(),
        coin: cs.clone(),
        kernels: cs.ops().iter().map(CoinKernel::new).collect(),
        assembly: Assembly::Shifts,
    })
}

/// `W_C = ∑_k (∂_k* + ∂_k) ⊗ C_k`, assembled from the ladder operators.
pub fn null_potential_operator(cs: &CoinSystem) -> Result<WalkOperator> {
    let n = cs.n();
    FockSpace::new(n)?;
    cs.ensure_valid()?;
    let mut total = CsrMatrix::zeros((1 << (n + 1)) * cs.d(), (1 << (n + 1)) * cs.d());
    for k in 0..=n {
        let ladder = creation_operator(n, k)?.add(&annihilation_operator(n, k)?);
        let ladder = ladder.as_sparse().expect("ladder operators are sparse").clone();
        let coin = dense_to_csr(cs.op(k));
        total = total.add(&ladder.kron(&coin));
    }
    Ok(WalkOperator {
        nu: MagneticPotential::null(n),
        coin: cs.clone(),
        kernels: cs.ops().iter().map(CoinKernel::new).collect(),
        assembly: Assembly::Ladder(total),
    })
}

fn dense_to_csr(m: &Mat<C64>) -> CsrMatrix {
    let mut trips = Vec::new();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if m[(r, c)] != ZERO {
                trips.push((r, c, m[(r, c)]));
            }
        }
    }
    CsrMatrix::from_triplets(m.nrows(), m.ncols(), trips).expect("indices in range")
}

/// State `Φ_t` of the walk together with its time index.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkState {
    n: usize,
    d: usize,
    pub vector: StateVector,
    pub t: u64,
}

impl WalkState {
    pub fn new(n: usize, d: usize, vector: StateVector) -> Result<Self> {
        FockSpace::new(n)?;
        let dim = (1usize << (n + 1)) * d;
        if vector.dim() != dim {
            return Err(Error::arg(format!(
                "state has dimension {}, expected 2^(n+1)*d = {dim}",
                vector.dim()
            )));
        }
        Ok(WalkState { n, d, vector, t: 0 })
    }

    /// `Z_σ ⊗ e_k`.
    pub fn vertex(n: usize, d: usize, sigma: SubsetIndex, coin_index: usize) -> Result<Self> {
        let space = FockSpace::new(n)?;
        space.check_subset(sigma)?;
        if coin_index >= d {
            return Err(Error::arg(format!("coin index {coin_index} out of range 0..{d}")));
        }
        Self::new(n, d, StateVector::basis(space.dim() * d, sigma.index() * d + coin_index))
    }

    /// `Z_σ ⊗ (1/√d)∑_k e_k`.
    pub fn uniform_coin_vertex(n: usize, d: usize, sigma: SubsetIndex) -> Result<Self> {
        let space = FockSpace::new(n)?;
        space.check_subset(sigma)?;
        let coin = StateVector(vec![C64::new((d as f64).sqrt().recip(), 0.0); d]);
        Self::new(n, d, space.basis_vector(sigma)?.tensor(&coin))
    }

    /// `Ẑ_σ^(ν) ⊗ u` with `u` normalized.
    pub fn magnetic_eigenstate(sigma: SubsetIndex, nu: &MagneticPotential, u: &StateVector) -> Result<Self> {
        let z = magnetic_basis_vector(sigma, nu)?;
        Self::new(nu.n(), u.dim(), z.tensor(&u.normalized()?))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn norm(&self) -> f64 {
        self.vector.norm()
    }

    fn check_compatible(&self, op: &WalkOperator) -> Result<()> {
        if self.n != op.n() || self.d != op.d() {
            return Err(Error::arg(format!(
                "state is for (n, d) = ({}, {}) but operator is for ({}, {})",
                self.n,
                self.d,
                op.n(),
                op.d()
            )));
        }
        Ok(())
    }
}

/// `Φ_{t+1} = W^(ν) Φ_t`, matrix-free.
pub fn step(op: &WalkOperator, state: &WalkState) -> Result<WalkState> {
    state.check_compatible(op)?;
    Ok(WalkState {
        n: state.n,
        d: state.d,
        vector: StateVector(op.apply(&state.vector)),
        t: state.t + 1,
    })
}

/// `t`-fold application of [`step`].
pub fn evolve(op: &WalkOperator, initial: &WalkState, t: u64) -> Result<WalkState> {
    initial.check_compatible(op)?;
    let mut state = initial.clone();
    for _ in 0..t {
        state.vector = StateVector(op.apply(&state.vector));
        state.t += 1;
    }
    Ok(state)
}

/// Marginal of `|Φ|²` over the coin space, indexed by vertex bitmask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionDistribution {
    pub probabilities: Vec<f64>,
}

impl PositionDistribution {
    pub fn get(&self, sigma: SubsetIndex) -> f64 {
        self.probabilities[sigma.index()]
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Vertices carrying probability above `threshold`.
    pub fn support(&self, threshold: f64) -> Vec<SubsetIndex> {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > threshold)
            .map(|(s, _)| SubsetIndex::new(s as u32))
            .collect()
    }
}

pub fn position_distribution(state: &WalkState) -> PositionDistribution {
    PositionDistribution {
        probabilities: state
            .vector
            .chunks(state.d)
            .map(|block| block.iter().map(|z| z.norm_sqr()).sum())
            .collect(),
    }
}

/// Residuals of `W(Ẑ_σ ⊗ u) = Ẑ_σ ⊗ U_σu` and of the block structure of `W`
/// in the magnetic eigenbasis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntertwiningReport {
    /// `max_{σ,k} ‖W(Ẑ_σ⊗e_k) − Ẑ_σ⊗(U_σ e_k)‖`
    pub max_residual: f64,
    /// Largest entry of `(B⊗I)* W (B⊗I)` outside the diagonal `d × d` blocks.
    pub off_block_max: f64,
    /// `max_σ ‖block_σ − U_σ‖_max`.
    pub block_deviation: f64,
}

impl IntertwiningReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual <= tol && self.off_block_max <= tol && self.block_deviation <= tol
    }
}

pub fn intertwining_check(op: &WalkOperator) -> Result<IntertwiningReport> {
    let (n, d) = (op.n(), op.d());
    let fock_dim = op.fock_dim();
    let nu = op.potential();
    let basis: Vec<StateVector> = SubsetIndex::all(n)
        .map(|s| magnetic_basis_vector(s, nu))
        .collect::<Result<_>>()?;
    let mut report = IntertwiningReport {
        max_residual: 0.0,
        off_block_max: 0.0,
        block_deviation: 0.0,
    };
    for sigma in SubsetIndex::all(n) {
        let u_sigma = algebraic_sum(op.coin(), sigma)?;
        let z = &basis[sigma.index()];
        for k in 0..d {
            let image = StateVector(op.apply(&z.tensor(&StateVector::basis(d, k))));
            let u_col = StateVector((0..d).map(|r| u_sigma[(r, k)]).collect());
            report.max_residual = report.max_residual.max(image.distance(&z.tensor(&u_col)));

            // coefficients of the image in the basis {Ẑ_τ ⊗ e_l}
            for (tau, zt) in basis.iter().enumerate() {
                for l in 0..d {
                    let coeff: C64 = (0..fock_dim)
                        .map(|g| zt[g].conj() * image[g * d + l])
                        .sum();
                    if tau == sigma.index() {
                        report.block_deviation = report.block_deviation.max((coeff - u_sigma[(l, k)]).norm());
                    } else {
                        report.off_block_max = report.off_block_max.max(coeff.norm());
                    }
                }
            }
        }
    }
    Ok(report)
}
