//! Magnetic potentials and the shift involutions they induce on `h_n`.
//!
//! The walk only ever reads the reduced phases `ν_j = ν({j}, ℕ_n∖{j})`; the
//! full antisymmetric table exists for ingestion and validation.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use faer::Mat;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockSpace, SubsetIndex};
use crate::linalg::{CsrMatrix, OperatorMatrix, StateVector, C64, ZERO};

const ANTISYMMETRY_TOL: f64 = 1e-12;

/// Reduced magnetic phases `(ν_0,…,ν_n)`, each in `[−π, π]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MagneticPotential {
    phases: Vec<f64>,
}

impl MagneticPotential {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::arg("a magnetic potential needs at least one phase"));
        }
        if let Some((j, p)) = phases
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || p.abs() > PI)
        {
            return Err(Error::arg(format!("phase nu_{j} = {p} lies outside [-pi, pi]")));
        }
        Ok(MagneticPotential { phases })
    }

    /// The null potential: all phases zero.
    pub fn null(n: usize) -> Self {
        MagneticPotential {
            phases: vec![0.0; n + 1],
        }
    }

    /// Phases drawn i.i.d. uniform on `[−π, π]`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        MagneticPotential {
            phases: (0..=n).map(|_| rng.random_range(-PI..=PI)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.phases.len() - 1
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn phase(&self, j: usize) -> f64 {
        self.phases[j]
    }

    pub fn is_null(&self) -> bool {
        self.phases.iter().all(|&p| p == 0.0)
    }

    /// Coefficient picked up by `Z_σ` under `Ξ_j`:
    /// `e^{−iν_j}` if `j ∉ σ`, `e^{iν_j}` if `j ∈ σ`.
    pub fn shift_factor(&self, sigma: SubsetIndex, j: usize) -> C64 {
        let p = self.phases[j];
        if sigma.contains(j) {
            C64::from_polar(1.0, p)
        } else {
            C64::from_polar(1.0, -p)
        }
    }

    /// `∑_{j∈γ} ν_j`, zero for the empty set.
    pub fn phase_sum(&self, gamma: SubsetIndex) -> f64 {
        gamma.elements().map(|j| self.phases[j]).sum()
    }

    pub(crate) fn check_n(&self, n: usize) -> Result<()> {
        if self.n() != n {
            return Err(Error::arg(format!(
                "potential has {} phases but n = {n} needs {}",
                self.phases.len(),
                n + 1
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for MagneticPotential {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        MagneticPotential::new(v)
    }
}

impl From<MagneticPotential> for Vec<f64> {
    fn from(p: MagneticPotential) -> Self {
        p.phases
    }
}

/// A magnetic potential as a full function `Γ_n × Γ_n → [−π, π]`.
/// Pairs that are not stored read as zero.
#[derive(Clone, Debug, PartialEq)]
pub struct FullPotentialTable {
    n: usize,
    values: BTreeMap<(u32, u32), f64>,
}

#[derive(Serialize, Deserialize)]
struct TableEntry {
    sigma: u32,
    tau: u32,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct TableDocument {
    n: usize,
    entries: Vec<TableEntry>,
}

impl FullPotentialTable {
    pub fn zero(n: usize) -> Self {
        FullPotentialTable {
            n,
            values: BTreeMap::new(),
        }
    }

    /// Every off-diagonal pair filled with a uniform value in `[−π, π]`, antisymmetric.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut table = Self::zero(n);
        for s in SubsetIndex::all(n) {
            for t in SubsetIndex::all(n).filter(|t| t.bits() > s.bits()) {
                let v = rng.random_range(-PI..=PI);
                table.values.insert((s.bits(), t.bits()), v);
                table.values.insert((t.bits(), s.bits()), -v);
            }
        }
        table
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, sigma: SubsetIndex, tau: SubsetIndex) -> f64 {
        self.values
            .get(&(sigma.bits(), tau.bits()))
            .copied()
            .unwrap_or(0.0)
    }

    /// Stores `value` at `(σ, τ)` without touching `(τ, σ)`.
    pub fn set(&mut self, sigma: SubsetIndex, tau: SubsetIndex, value: f64) -> Result<()> {
        let space = FockSpace::new(self.n)?;
        space.check_subset(sigma)?;
        space.check_subset(tau)?;
        self.values.insert((sigma.bits(), tau.bits()), value);
        Ok(())
    }

    /// Stores `value` at `(σ, τ)` and `−value` at `(τ, σ)`.
    pub fn set_antisymmetric(&mut self, sigma: SubsetIndex, tau: SubsetIndex, value: f64) -> Result<()> {
        self.set(sigma, tau, value)?;
        self.set(tau, sigma, -value)
    }

    pub fn validate(&self) -> Result<()> {
        FockSpace::new(self.n)?;
        for (&(s, t), &v) in &self.values {
            let (sigma, tau) = (SubsetIndex::new(s), SubsetIndex::new(t));
            if !sigma.is_within(self.n) || !tau.is_within(self.n) {
                return Err(Error::Validation(format!(
                    "pair ({s}, {t}) is not a pair of subsets of {{0,…,{}}}",
                    self.n
                )));
            }
            if !v.is_finite() || v.abs() > PI {
                return Err(Error::Validation(format!(
                    "value {v} at pair ({s}, {t}) lies outside [-pi, pi]"
                )));
            }
            let mirror = self.get(tau, sigma);
            if (v + mirror).abs() > ANTISYMMETRY_TOL {
                return Err(Error::Validation(format!(
                    "antisymmetry violated at pair (sigma={s}, tau={t}): {v} vs {mirror}"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TableDocument = serde_json::from_str(text)?;
        let mut table = Self::zero(doc.n);
        FockSpace::new(doc.n)?;
        for e in doc.entries {
            table.values.insert((e.sigma, e.tau), e.value);
        }
        table.validate()?;
        Ok(table)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = TableDocument {
            n: self.n,
            entries: self
                .values
                .iter()
                .map(|(&(sigma, tau), &value)| TableEntry { sigma, tau, value })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

/// `ν_j = ν({j}, ℕ_n∖{j})`.
pub fn reduce_potential(full: &FullPotentialTable) -> Result<MagneticPotential> {
    full.validate()?;
    let n = full.n();
    let phases = (0..=n)
        .map(|j| {
            let single = SubsetIndex::singleton(j);
            full.get(single, single.complement(n))
        })
        .collect();
    MagneticPotential::new(phases)
}

pub fn null_potential(n: usize) -> MagneticPotential {
    MagneticPotential::null(n)
}

/// `Ξ_j^(ν) = e^{−iν_j} ∂_j* + e^{iν_j} ∂_j`, a unitary involution on `h_n`.
pub fn magnetic_shift(n: usize, j: usize, nu: &MagneticPotential) -> Result<OperatorMatrix> {
    let space = FockSpace::new(n)?;
    space.check_mode(j)?;
    nu.check_n(n)?;
    let trips = space
        .subsets()
        .map(|s| (s.toggle(j).index(), s.index(), nu.shift_factor(s, j)))
        .collect();
    Ok(CsrMatrix::from_triplets(space.dim(), space.dim(), trips)?.into())
}

/// Applies `Ξ_j^(ν)` to a vector of `h_n` without forming the matrix.
pub fn apply_shift(j: usize, nu: &MagneticPotential, v: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; v.len()];
    for (s, &x) in v.iter().enumerate() {
        let sigma = SubsetIndex::new(s as u32);
        out[sigma.toggle(j).index()] = nu.shift_factor(sigma, j) * x;
    }
    out
}

/// Images of `Z_∅` and `Z_γ` under `∏_{j∈γ} Ξ_j^(ν)`, computed by applying the
/// shifts one at a time.
pub fn shift_product_action(
    gamma: SubsetIndex,
    nu: &MagneticPotential,
) -> Result<(StateVector, StateVector)> {
    let space = FockSpace::new(nu.n())?;
    space.check_subset(gamma)?;
    let mut from_empty = space.basis_vector(SubsetIndex::EMPTY)?;
    let mut from_gamma = space.basis_vector(gamma)?;
    for j in gamma.elements() {
        from_empty = apply_shift(j, nu, &from_empty).into();
        from_gamma = apply_shift(j, nu, &from_gamma).into();
    }
    Ok((from_empty, from_gamma))
}

/// `Ξ̂_σ^(ν) = ∏_j (I + E_σ(j) Ξ_j^(ν))`.
pub fn xi_hat(sigma: SubsetIndex, nu: &MagneticPotential) -> Result<OperatorMatrix> {
    let n = nu.n();
    let space = FockSpace::new(n)?;
    space.check_subset(sigma)?;
    let id = OperatorMatrix::identity(space.dim());
    let mut acc = id.clone();
    for j in 0..=n {
        let factor = id.add(&magnetic_shift(n, j, nu)?.scale(C64::new(sigma.sign(j), 0.0)));
        acc = acc.matmul(&factor);
    }
    Ok(acc)
}

/// `Ẑ_σ^(ν) = 2^{−(n+1)/2} Ξ̂_σ^(ν) Z_∅`, built by applying the factors of
/// `Ξ̂_σ` to `Z_∅` in turn.
pub fn magnetic_basis_vector(sigma: SubsetIndex, nu: &MagneticPotential) -> Result<StateVector> {
    let n = nu.n();
    let space = FockSpace::new(n)?;
    space.check_subset(sigma)?;
    let mut v = space.basis_vector(SubsetIndex::EMPTY)?.0;
    for j in 0..=n {
        let e = sigma.sign(j);
        let shifted = apply_shift(j, nu, &v);
        for (x, y) in v.iter_mut().zip(shifted) {
            *x += y * e;
        }
    }
    let scale = (space.dim() as f64).sqrt().recip();
    Ok(StateVector(v).scaled(C64::new(scale, 0.0)))
}

/// Closed form of `Ẑ_σ^(ν)`: the component on `Z_γ` is
/// `2^{−(n+1)/2} (−1)^{#(γ∖σ)} e^{−i∑_{j∈γ} ν_j}`.
pub fn magnetic_basis_vector_explicit(
    sigma: SubsetIndex,
    nu: &MagneticPotential,
) -> Result<StateVector> {
    let space = FockSpace::new(nu.n())?;
    space.check_subset(sigma)?;
    let scale = (space.dim() as f64).sqrt().recip();
    Ok(StateVector(
        space
            .subsets()
            .map(|gamma| {
                let sign = if gamma.difference(sigma).cardinality() % 2 == 0 { 1.0 } else { -1.0 };
                C64::from_polar(sign * scale, -nu.phase_sum(gamma))
            })
            .collect(),
    ))
}

/// Unitary whose column `σ` is `Ẑ_σ^(ν)`.
pub fn magnetic_basis_change(nu: &MagneticPotential) -> Result<OperatorMatrix> {
    let space = FockSpace::new(nu.n())?;
    let dim = space.dim();
    let mut m = Mat::<C64>::zeros(dim, dim);
    for sigma in space.subsets() {
        let v = magnetic_basis_vector(sigma, nu)?;
        for (r, z) in v.iter().enumerate() {
            m[(r, sigma.index())] = *z;
        }
    }
    Ok(m.into())
}

/// Residuals of `Ξ_j² = I` and `Ξ_j = Ξ_j*` over all modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvolutionReport {
    pub n: usize,
    pub square_residual: f64,
    pub hermiticity_residual: f64,
}

impl InvolutionReport {
    pub fn max_residual(&self) -> f64 {
        self.square_residual.max(self.hermiticity_residual)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

pub fn involution_check(nu: &MagneticPotential) -> Result<InvolutionReport> {
    let n = nu.n();
    let id = OperatorMatrix::identity(1 << (n + 1));
    let mut report = InvolutionReport {
        n,
        square_residual: 0.0,
        hermiticity_residual: 0.0,
    };
    for j in 0..=n {
        let xi = magnetic_shift(n, j, nu)?;
        report.square_residual = report.square_residual.max(xi.matmul(&xi).max_diff(&id));
        report.hermiticity_residual = report.hermiticity_residual.max(xi.hermiticity_residual());
    }
    Ok(report)
}

/// Orthonormality and eigen-relations of `{Ẑ_σ}`, plus agreement between the
/// operator and closed-form constructions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenbasisReport {
    pub n: usize,
    /// `‖B*B − I‖_max` for the basis change `B`.
    pub gram_residual: f64,
    /// `max ‖Ξ_j Ẑ_σ − E_σ(j) Ẑ_σ‖`.
    pub eigen_residual: f64,
    /// `max |Ẑ_σ(operator) − Ẑ_σ(closed form)|`.
    pub construction_difference: f64,
}

impl EigenbasisReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.gram_residual <= tol && self.eigen_residual <= tol && self.construction_difference <= tol
    }
}

pub fn eigenbasis_check(nu: &MagneticPotential) -> Result<EigenbasisReport> {
    let n = nu.n();
    let b = magnetic_basis_change(nu)?;
    let mut report = EigenbasisReport {
        n,
        gram_residual: b.unitarity_residual(),
        eigen_residual: 0.0,
        construction_difference: 0.0,
    };
    for sigma in SubsetIndex::all(n) {
        let z = magnetic_basis_vector(sigma, nu)?;
        let explicit = magnetic_basis_vector_explicit(sigma, nu)?;
        report.construction_difference = report.construction_difference.max(z.max_abs_diff(&explicit));
        for j in 0..=n {
            let image = StateVector(apply_shift(j, nu, &z));
            let expected = z.scaled(C64::new(sigma.sign(j), 0.0));
            report.eigen_residual = report.eigen_residual.max(image.distance(&expected));
        }
    }
    Ok(report)
}
