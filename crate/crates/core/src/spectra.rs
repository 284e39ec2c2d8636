//! Spectra of unitary operators and the walk-versus-coin spectral checks.
//!
//! Two independent eigen routes are used:
//!
//! * [`unitary_eigenvalues`] maps a unitary `A` through the Cayley transform
//!   `K = i(I − e^{iφ}A)(I + e^{iφ}A)^{-1}`, which is Hermitian with eigenvalues
//!   `tan(α/2)`, and solves the Hermitian problem. Every returned eigenvalue is
//!   exactly unimodular by construction.
//! * [`coin_union_spectrum`] solves each small `U_σ` with the general complex
//!   Schur eigensolver and checks unimodularity afterwards.
//!
//! Raw eigenvalues are clustered by single linkage on arc distance; a cluster
//! becomes one reported value whose multiplicity is the cluster size.

use std::f64::consts::PI;

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coin::{algebraic_sum, CoinSystem, COIN_TOL};
use crate::error::{Error, Result};
use crate::fock::SubsetIndex;
use crate::linalg::{OperatorMatrix, StateVector, C64, I, ONE, ZERO};
use crate::magnetic::{magnetic_basis_vector, MagneticPotential};
use crate::walk::{check_dense_capacity, evolution_operator, WalkOperator};

/// Default clustering and set-comparison tolerance.
pub const SPECTRUM_TOL: f64 = 1e-8;

/// Inputs to the eigen routines must be unitary to this residual.
pub const UNITARITY_GUARD: f64 = 1e-8;

const INITIAL_ROTATION: f64 = 0.618_033_988_749_894_8;
/// Minimum arc distance between the Cayley pole and the spectrum. Angle error
/// grows like `ε/distance`, so this keeps it near 1e-10.
const POLE_MARGIN: f64 = 1e-5;

/// Principal argument in `(−π, π]`.
pub fn principal_arg(z: C64) -> f64 {
    let a = z.im.atan2(z.re);
    if a <= -PI {
        PI
    } else {
        a
    }
}

/// Arc distance between two points of the unit circle.
pub fn arc_distance(a: C64, b: C64) -> f64 {
    principal_arg(a * b.conj()).abs()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigenvalue {
    pub value: C64,
    pub multiplicity: usize,
}

impl Eigenvalue {
    pub fn arg(&self) -> f64 {
        principal_arg(self.value)
    }
}

/// Clusters eigenvalues on the unit circle by single linkage at `tol` (arc
/// distance, wrapping through `−1`). Output is sorted by principal argument.
pub fn cluster_unit_eigenvalues(raw: &[C64], tol: f64) -> Vec<Eigenvalue> {
    if raw.is_empty() {
        return Vec::new();
    }
    let mut sorted: Vec<(f64, C64)> = raw.iter().map(|&z| (principal_arg(z), z)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut groups: Vec<Vec<C64>> = vec![vec![sorted[0].1]];
    for w in sorted.windows(2) {
        if w[1].0 - w[0].0 <= tol {
            groups.last_mut().unwrap().push(w[1].1);
        } else {
            groups.push(vec![w[1].1]);
        }
    }
    if groups.len() > 1 {
        let first = sorted[0].0;
        let last = sorted[sorted.len() - 1].0;
        if first + 2.0 * PI - last <= tol {
            let head = groups.remove(0);
            groups.last_mut().unwrap().extend(head);
        }
    }

    let mut out: Vec<Eigenvalue> = groups
        .into_iter()
        .map(|g| {
            let sum: C64 = g.iter().sum();
            let value = if sum.norm() > 0.0 { sum / sum.norm() } else { g[0] / g[0].norm() };
            Eigenvalue {
                value,
                multiplicity: g.len(),
            }
        })
        .collect();
    out.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
    out
}

/// Symmetric Hausdorff distance between two finite point sets in `ℂ`.
pub fn hausdorff_distance(a: &[C64], b: &[C64]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    let directed = |x: &[C64], y: &[C64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Eigenvalues of one operator with multiplicities and provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumReport {
    pub source: String,
    pub nu: Option<Vec<f64>>,
    pub tolerance: f64,
    pub eigenvalues: Vec<Eigenvalue>,
}

#[derive(Serialize, Deserialize)]
struct EigenvalueWire {
    re: f64,
    im: f64,
    arg: f64,
    mult: usize,
}

#[derive(Serialize, Deserialize)]
struct SpectrumWire {
    source: String,
    nu: Option<Vec<f64>>,
    tolerance: f64,
    eigenvalues: Vec<EigenvalueWire>,
}

impl Serialize for SpectrumReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SpectrumWire {
            source: self.source.clone(),
            nu: self.nu.clone(),
            tolerance: self.tolerance,
            eigenvalues: self
                .eigenvalues
                .iter()
                .map(|e| EigenvalueWire {
                    re: e.value.re,
                    im: e.value.im,
                    arg: e.arg(),
                    mult: e.multiplicity,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpectrumReport {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = SpectrumWire::deserialize(d)?;
        Ok(SpectrumReport {
            source: wire.source,
            nu: wire.nu,
            tolerance: wire.tolerance,
            eigenvalues: wire
                .eigenvalues
                .into_iter()
                .map(|e| Eigenvalue {
                    value: C64::new(e.re, e.im),
                    multiplicity: e.mult,
                })
                .collect(),
        })
    }
}

impl SpectrumReport {
    pub fn from_raw(source: impl Into<String>, nu: Option<&MagneticPotential>, raw: &[C64], tol: f64) -> Self {
        SpectrumReport {
            source: source.into(),
            nu: nu.map(|p| p.phases().to_vec()),
            tolerance: tol,
            eigenvalues: cluster_unit_eigenvalues(raw, tol),
        }
    }

    pub fn values(&self) -> Vec<C64> {
        self.eigenvalues.iter().map(|e| e.value).collect()
    }

    pub fn total_multiplicity(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.multiplicity).sum()
    }

    /// Largest `||λ| − 1|` over the reported values.
    pub fn max_modulus_defect(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|e| (e.value.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn hausdorff_distance(&self, other: &SpectrumReport) -> f64 {
        hausdorff_distance(&self.values(), &other.values())
    }

    /// Same values with every multiplicity set to one.
    pub fn as_set(&self) -> SpectrumReport {
        SpectrumReport {
            eigenvalues: self
                .eigenvalues
                .iter()
                .map(|e| Eigenvalue {
                    value: e.value,
                    multiplicity: 1,
                })
                .collect(),
            ..self.clone()
        }
    }

    /// Multiset equality after clustering both reports together at `tol`.
    pub fn multiset_matches(&self, other: &SpectrumReport, tol: f64) -> bool {
        let mut tagged: Vec<(f64, C64, isize)> = self
            .eigenvalues
            .iter()
            .map(|e| (e.arg(), e.value, e.multiplicity as isize))
            .chain(other.eigenvalues.iter().map(|e| (e.arg(), e.value, -(e.multiplicity as isize))))
            .collect();
        if tagged.is_empty() {
            return true;
        }
        tagged.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut balances = vec![tagged[0].2];
        for w in tagged.windows(2) {
            if w[1].0 - w[0].0 <= tol {
                *balances.last_mut().unwrap() += w[1].2;
            } else {
                balances.push(w[1].2);
            }
        }
        if balances.len() > 1 && tagged[0].0 + 2.0 * PI - tagged[tagged.len() - 1].0 <= tol {
            let head = balances.remove(0);
            *balances.last_mut().unwrap() += head;
        }
        balances.iter().all(|&b| b == 0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Raw eigenvalues (and optionally eigenvectors as columns) of a unitary matrix.
pub struct UnitaryEigen {
    pub values: Vec<C64>,
    pub vectors: Option<Mat<C64>>,
    /// Rotation `φ` applied before the Cayley transform.
    pub rotation: f64,
}

/// Hermitian `i(I − V)(I + V)^{-1} = 2i(I + V)^{-1} − iI` for `V = e^{iφ}A`,
/// or `None` when the inverse is not finite (the pole is an eigenvalue).
fn cayley_hermitian(a: &Mat<C64>, phi: f64) -> Option<Mat<C64>> {
    let dim = a.nrows();
    let rot = C64::from_polar(1.0, phi);
    let plus = Mat::from_fn(dim, dim, |i, j| if i == j { ONE } else { ZERO } + rot * a[(i, j)]);
    let inv = plus.partial_piv_lu().inverse();
    drop(plus);
    let mut k = Mat::<C64>::zeros(dim, dim);
    for j in 0..dim {
        for i in j..dim {
            // Hermitian part of 2i·inv; −iI is anti-Hermitian and drops out
            let v = I * (inv[(i, j)] - inv[(j, i)].conj());
            if !v.re.is_finite() || !v.im.is_finite() {
                return None;
            }
            k[(i, j)] = v;
            k[(j, i)] = v.conj();
        }
    }
    Some(k)
}

fn eigen_at_rotation(a: &Mat<C64>, phi: f64, with_vectors: bool) -> Result<Option<UnitaryEigen>> {
    let Some(k) = cayley_hermitian(a, phi) else {
        return Ok(None);
    };
    let back = |t: f64| C64::from_polar(1.0, 2.0 * t.atan() - phi);
    if with_vectors {
        let evd = k
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numerical(format!("Hermitian eigensolver failed: {e:?}")))?;
        let values = evd.S().column_vector().iter().map(|t| back(t.re)).collect();
        Ok(Some(UnitaryEigen {
            values,
            vectors: Some(evd.U().to_owned()),
            rotation: phi,
        }))
    } else {
        let ts = k
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Numerical(format!("Hermitian eigensolver failed: {e:?}")))?;
        Ok(Some(UnitaryEigen {
            values: ts.into_iter().map(back).collect(),
            vectors: None,
            rotation: phi,
        }))
    }
}

/// Rotation that puts the Cayley pole in the middle of the widest spectral gap.
fn rotation_for_widest_gap(values: &[C64]) -> (f64, f64) {
    let mut args: Vec<f64> = values.iter().map(|&z| principal_arg(z)).collect();
    args.sort_by(f64::total_cmp);
    let mut best = (args[0] + 2.0 * PI - args[args.len() - 1], args[args.len() - 1]);
    for w in args.windows(2) {
        if w[1] - w[0] > best.0 {
            best = (w[1] - w[0], w[0]);
        }
    }
    let pole = best.1 + best.0 / 2.0;
    // pole of e^{iφ}A sits where e^{iφ}λ = −1, i.e. arg λ = π − φ
    (PI - pole, best.0 / 2.0)
}

fn pole_distance(values: &[C64], phi: f64) -> f64 {
    let pole = C64::from_polar(1.0, PI - phi);
    values.iter().map(|&z| arc_distance(z, pole)).fold(f64::INFINITY, f64::min)
}

/// Cayley-route eigendecomposition of a dense matrix assumed unitary.
pub fn unitary_eigen_unchecked(a: &Mat<C64>, with_vectors: bool) -> Result<UnitaryEigen> {
    if a.nrows() == 0 {
        return Ok(UnitaryEigen {
            values: Vec::new(),
            vectors: with_vectors.then(|| Mat::zeros(0, 0)),
            rotation: 0.0,
        });
    }
    let mut phi = INITIAL_ROTATION;
    let mut first = eigen_at_rotation(a, phi, with_vectors)?;
    if first.is_none() {
        phi = INITIAL_ROTATION + 1.0;
        first = eigen_at_rotation(a, phi, with_vectors)?;
    }
    let first = first.ok_or_else(|| Error::Numerical("Cayley transform singular at two rotations".into()))?;
    let dist = pole_distance(&first.values, phi);
    if dist >= POLE_MARGIN {
        return Ok(first);
    }
    let (better, margin) = rotation_for_widest_gap(&first.values);
    if margin <= dist {
        return Ok(first);
    }
    eigen_at_rotation(a, better, with_vectors)?
        .ok_or_else(|| Error::Numerical("Cayley transform singular after re-rotation".into()))
}

fn check_unitary(a: &OperatorMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::arg(format!("operator is {}x{}, not square", a.rows(), a.cols())));
    }
    let r = a.unitarity_residual();
    if r.is_nan() || r > UNITARITY_GUARD {
        return Err(Error::arg(format!(
            "operator is not unitary: residual {r:.3e} > {UNITARITY_GUARD:e}"
        )));
    }
    Ok(())
}

/// Spectrum of a unitary operator, clustered at `tol`.
pub fn unitary_eigenvalues_with_tol(a: &OperatorMatrix, tol: f64) -> Result<SpectrumReport> {
    check_unitary(a)?;
    let eig = unitary_eigen_unchecked(&a.to_dense(), false)?;
    Ok(SpectrumReport::from_raw("unitary", None, &eig.values, tol))
}

pub fn unitary_eigenvalues(a: &OperatorMatrix) -> Result<SpectrumReport> {
    unitary_eigenvalues_with_tol(a, SPECTRUM_TOL)
}

/// Approximate point spectrum. For a finite-dimensional unitary it coincides
/// with the point spectrum, so this is [`unitary_eigenvalues`] relabeled;
/// [`approximate_eigen_witnesses`] and [`min_residual_norm`] give the
/// defining property independent content.
pub fn approximate_spectrum(a: &OperatorMatrix) -> Result<SpectrumReport> {
    let mut report = unitary_eigenvalues(a)?;
    report.source = "approximate spectrum".into();
    Ok(report)
}

/// For each computed eigenpair `(λ, x)`, the residual `‖Ax − λx‖` with `‖x‖ = 1`.
pub fn approximate_eigen_witnesses(a: &OperatorMatrix) -> Result<Vec<(C64, f64)>> {
    check_unitary(a)?;
    let eig = unitary_eigen_unchecked(&a.to_dense(), true)?;
    let vectors = eig.vectors.expect("vectors requested");
    Ok(eig
        .values
        .iter()
        .enumerate()
        .map(|(c, &lambda)| {
            let x = StateVector((0..vectors.nrows()).map(|r| vectors[(r, c)]).collect());
            let ax = StateVector(a.apply(&x));
            (lambda, ax.distance(&x.scaled(lambda)) / x.norm())
        })
        .collect())
}

/// `min_{‖x‖=1} ‖Ax − μx‖`, the smallest singular value of `A − μI`.
pub fn min_residual_norm(a: &OperatorMatrix, mu: C64) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::arg("operator must be square"));
    }
    let dense = a.to_dense();
    let dim = dense.nrows();
    let shifted = Mat::from_fn(dim, dim, |i, j| dense[(i, j)] - if i == j { mu } else { ZERO });
    let sv = shifted
        .singular_values()
        .map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?;
    Ok(sv.into_iter().fold(f64::INFINITY, f64::min))
}

/// Spectrum of the assembled `W^(ν)`, refused above the dense capacity guard.
pub fn walk_point_spectrum(nu: &MagneticPotential, cs: &CoinSystem) -> Result<SpectrumReport> {
    walk_point_spectrum_with_tol(nu, cs, SPECTRUM_TOL)
}

pub fn walk_point_spectrum_with_tol(nu: &MagneticPotential, cs: &CoinSystem, tol: f64) -> Result<SpectrumReport> {
    let op = evolution_operator(nu, cs)?;
    operator_spectrum(&op, tol)
}

pub(crate) fn operator_spectrum(op: &WalkOperator, tol: f64) -> Result<SpectrumReport> {
    check_dense_capacity(op.dim())?;
    let sparse = op.to_operator();
    let r = sparse.unitarity_residual();
    if r.is_nan() || r > UNITARITY_GUARD {
        return Err(Error::Numerical(format!("walk operator unitarity residual {r:.3e}")));
    }
    let dense = sparse.into_dense();
    let eig = unitary_eigen_unchecked(&dense, false)?;
    Ok(SpectrumReport::from_raw("walk", Some(op.potential()), &eig.values, tol))
}

/// The union over `σ` of the spectra of the algebraic sums `U_σ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoinUnionSpectrum {
    /// Distinct values, each with multiplicity one.
    pub set: SpectrumReport,
    /// Multiplicities summed over `σ`; total `2^(n+1)·d`.
    pub multiset: SpectrumReport,
}

fn algebraic_sum_checked(cs: &CoinSystem, sigma: SubsetIndex) -> Result<Mat<C64>> {
    let u = algebraic_sum(cs, sigma)?;
    let r = OperatorMatrix::from(u.clone()).unitarity_residual();
    if r.is_nan() || r > COIN_TOL {
        return Err(Error::Validation(format!(
            "U_{sigma:?} has unitarity residual {r:.3e} > {COIN_TOL:e}"
        )));
    }
    Ok(u)
}

/// Union of `Spec(U_σ)` via the general complex Schur eigensolver.
pub fn coin_union_spectrum(cs: &CoinSystem) -> Result<CoinUnionSpectrum> {
    coin_union_spectrum_with_tol(cs, SPECTRUM_TOL)
}

pub fn coin_union_spectrum_with_tol(cs: &CoinSystem, tol: f64) -> Result<CoinUnionSpectrum> {
    cs.ensure_valid()?;
    let mut raw = Vec::with_capacity((1 << (cs.n() + 1)) * cs.d());
    for sigma in SubsetIndex::all(cs.n()) {
        let u = algebraic_sum_checked(cs, sigma)?;
        let values = u
            .eigenvalues()
            .map_err(|e| Error::Numerical(format!("eigensolver failed for U_{sigma:?}: {e:?}")))?;
        for z in values {
            if (z.norm() - 1.0).abs() > UNITARITY_GUARD {
                return Err(Error::Numerical(format!(
                    "eigenvalue {z} of U_{sigma:?} is off the unit circle"
                )));
            }
            raw.push(z);
        }
    }
    let multiset = SpectrumReport::from_raw("coin union (multiset)", None, &raw, tol);
    let mut set = multiset.as_set();
    set.source = "coin union".into();
    Ok(CoinUnionSpectrum { set, multiset })
}

/// Union of `Aev(U_σ)` via [`approximate_spectrum`] on each `U_σ`.
pub fn coin_union_approximate_spectrum(cs: &CoinSystem, tol: f64) -> Result<CoinUnionSpectrum> {
    cs.ensure_valid()?;
    let mut raw = Vec::new();
    for sigma in SubsetIndex::all(cs.n()) {
        let u = OperatorMatrix::from(algebraic_sum_checked(cs, sigma)?);
        let aev = approximate_spectrum(&u)?;
        for e in aev.eigenvalues {
            raw.extend(std::iter::repeat_n(e.value, e.multiplicity));
        }
    }
    let multiset = SpectrumReport::from_raw("coin union approximate spectrum (multiset)", None, &raw, tol);
    let mut set = multiset.as_set();
    set.source = "coin union approximate spectrum".into();
    Ok(CoinUnionSpectrum { set, multiset })
}

/// Outcome of comparing the walk spectrum with the coin-union spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralUnionCheck {
    pub passed: bool,
    pub tolerance: f64,
    /// Hausdorff distance between the two eigenvalue sets.
    pub hausdorff_distance: f64,
    /// Multiplicity-aware comparison. Reported separately; the pass flag
    /// depends only on the set comparison.
    pub multiset_equal: bool,
    pub walk: SpectrumReport,
    pub union: SpectrumReport,
}

/// `Spec(W^(ν)) = ⋃_σ Spec(U_σ)` as sets, within `tol` in Hausdorff distance.
pub fn verify_point_spectrum_theorem(nu: &MagneticPotential, cs: &CoinSystem, tol: f64) -> Result<SpectralUnionCheck> {
    cs.ensure_valid()?;
    let walk = walk_point_spectrum_with_tol(nu, cs, tol)?;
    let union = coin_union_spectrum_with_tol(cs, tol)?;
    let hausdorff = walk.hausdorff_distance(&union.set);
    Ok(SpectralUnionCheck {
        passed: hausdorff <= tol,
        tolerance: tol,
        hausdorff_distance: hausdorff,
        multiset_equal: walk.multiset_matches(&union.multiset, tol),
        walk,
        union: union.set,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximateSpectrumCheck {
    pub passed: bool,
    pub tolerance: f64,
    pub hausdorff_distance: f64,
    pub multiset_equal: bool,
    /// `max ‖W(Ẑ_σ⊗u) − λ(Ẑ_σ⊗u)‖` over unit eigenvectors `u` of every `U_σ`.
    pub max_witness_residual: f64,
    /// True when both sides match the corresponding point-spectrum sides and
    /// the two checks reach the same verdict.
    pub agrees_with_point_check: bool,
    pub walk: SpectrumReport,
    pub union: SpectrumReport,
    pub point: SpectralUnionCheck,
}

/// `Aev(W^(ν)) = ⋃_σ Aev(U_σ)`, with lifted residual witnesses and a
/// cross-check against [`verify_point_spectrum_theorem`].
pub fn verify_approximate_spectrum_theorem(
    nu: &MagneticPotential,
    cs: &CoinSystem,
    tol: f64,
) -> Result<ApproximateSpectrumCheck> {
    let point = verify_point_spectrum_theorem(nu, cs, tol)?;
    let op = evolution_operator(nu, cs)?;
    check_dense_capacity(op.dim())?;
    let mut walk = approximate_spectrum(&OperatorMatrix::from(op.to_dense()?))?;
    walk.tolerance = tol;
    walk.nu = Some(nu.phases().to_vec());
    walk.eigenvalues = cluster_unit_eigenvalues(
        &walk
            .eigenvalues
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.value, e.multiplicity))
            .collect::<Vec<_>>(),
        tol,
    );
    let union = coin_union_approximate_spectrum(cs, tol)?;
    let max_witness_residual = lifted_witness_residual(&op)?;

    let hausdorff = walk.hausdorff_distance(&union.set);
    let set_ok = hausdorff <= tol;
    let agrees = walk.hausdorff_distance(&point.walk) <= tol
        && union.set.hausdorff_distance(&point.union) <= tol
        && set_ok == point.passed;
    Ok(ApproximateSpectrumCheck {
        passed: set_ok && max_witness_residual <= tol && agrees,
        tolerance: tol,
        hausdorff_distance: hausdorff,
        multiset_equal: walk.multiset_matches(&union.multiset, tol),
        max_witness_residual,
        agrees_with_point_check: agrees,
        walk,
        union: union.set,
        point,
    })
}

/// Lifts every eigenpair `(λ, u)` of every `U_σ` to `Ψ = Ẑ_σ ⊗ u` and returns
/// the largest `‖WΨ − λΨ‖`.
pub fn lifted_witness_residual(op: &WalkOperator) -> Result<f64> {
    let d = op.d();
    let mut worst = 0.0f64;
    for sigma in SubsetIndex::all(op.n()) {
        let u = algebraic_sum_checked(op.coin(), sigma)?;
        let eig = unitary_eigen_unchecked(&u, true)?;
        let vectors = eig.vectors.expect("vectors requested");
        let z = magnetic_basis_vector(sigma, op.potential())?;
        for (c, &lambda) in eig.values.iter().enumerate() {
            let coin = StateVector((0..d).map(|r| vectors[(r, c)]).collect()).normalized()?;
            let psi = z.tensor(&coin);
            let image = StateVector(op.apply(&psi));
            worst = worst.max(image.distance(&psi.scaled(lambda)));
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub passed: bool,
    pub tolerance: f64,
    /// Potentials compared; the first is the null potential.
    pub potentials: Vec<Vec<f64>>,
    /// Largest pairwise Hausdorff distance between walk spectra.
    pub max_spectrum_distance: f64,
    /// Largest pairwise `‖W^(ν1) − W^(ν2)‖_max`.
    pub max_operator_difference: f64,
    pub spectra: Vec<SpectrumReport>,
}

/// Minimum operator difference that makes the stability check non-vacuous.
pub const OPERATOR_DIFFERENCE_FLOOR: f64 = 1e-6;

/// Draws `samples` random potentials from `seed`, prepends the null potential
/// and compares all walk spectra pairwise.
pub fn verify_spectral_stability(cs: &CoinSystem, samples: usize, seed: u64, tol: f64) -> Result<StabilityReport> {
    if samples < 2 {
        return Err(Error::arg(format!("stability check needs at least 2 samples, got {samples}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut potentials = vec![MagneticPotential::null(cs.n())];
    potentials.extend((0..samples).map(|_| MagneticPotential::random(cs.n(), &mut rng)));
    verify_spectral_stability_for(cs, &potentials, tol)
}

pub fn verify_spectral_stability_for(
    cs: &CoinSystem,
    potentials: &[MagneticPotential],
    tol: f64,
) -> Result<StabilityReport> {
    if potentials.len() < 2 {
        return Err(Error::arg("stability check needs at least two potentials"));
    }
    let ops: Vec<WalkOperator> = potentials
        .iter()
        .map(|nu| evolution_operator(nu, cs))
        .collect::<Result<_>>()?;
    let spectra: Vec<SpectrumReport> = ops.iter().map(|op| operator_spectrum(op, tol)).collect::<Result<_>>()?;
    let sparse: Vec<OperatorMatrix> = ops.iter().map(WalkOperator::to_operator).collect();
    let mut max_spectrum_distance = 0.0f64;
    let mut max_operator_difference = 0.0f64;
    for a in 0..ops.len() {
        for b in a + 1..ops.len() {
            max_spectrum_distance = max_spectrum_distance.max(spectra[a].hausdorff_distance(&spectra[b]));
            max_operator_difference = max_operator_difference.max(sparse[a].max_diff(&sparse[b]));
        }
    }
    Ok(StabilityReport {
        passed: max_spectrum_distance <= tol && max_operator_difference > OPERATOR_DIFFERENCE_FLOOR,
        tolerance: tol,
        potentials: potentials.iter().map(|p| p.phases().to_vec()).collect(),
        max_spectrum_distance,
        max_operator_difference,
        spectra,
    })
}
