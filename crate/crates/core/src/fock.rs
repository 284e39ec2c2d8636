//! The Bernoulli Fock space `h_n` and its annihilation/creation operators.
//!
//! `h_n` has dimension `2^(n+1)` with canonical basis `{Z_σ}` indexed by the
//! subsets `σ ⊆ {0,…,n}`. A subset is stored as a bitmask and `Z_σ` is basis
//! vector number `bits(σ)`, so `Z_∅` is index 0.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, OperatorMatrix, StateVector, ONE};

/// Largest supported `n`. The state dimension `2^(n+1)` must stay addressable.
pub const MAX_N: usize = 26;

/// A subset `σ ⊆ {0,…,n}` encoded as a bitmask, bit `j` set iff `j ∈ σ`.
///
/// Doubles as a hypercube vertex: two subsets are adjacent iff their
/// symmetric difference has exactly one element.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubsetIndex(u32);

impl SubsetIndex {
    pub const EMPTY: SubsetIndex = SubsetIndex(0);

    pub const fn new(bits: u32) -> Self {
        SubsetIndex(bits)
    }

    pub fn from_elements(elements: &[usize]) -> Self {
        SubsetIndex(elements.iter().fold(0u32, |acc, &j| acc | (1 << j)))
    }

    /// `ℕ_n = {0,…,n}`.
    pub fn full(n: usize) -> Self {
        SubsetIndex(((1u64 << (n + 1)) - 1) as u32)
    }

    pub fn singleton(j: usize) -> Self {
        SubsetIndex(1 << j)
    }

    pub const fn bits(self) -> u32 {
        self.0
    }

    pub const fn index(self) -> usize {
        self.0 as usize
    }

    pub fn contains(self, j: usize) -> bool {
        j < 32 && self.0 & (1 << j) != 0
    }

    pub fn cardinality(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// True when every element lies in `{0,…,n}`.
    pub fn is_within(self, n: usize) -> bool {
        (self.0 as u64) < (1u64 << (n + 1))
    }

    pub fn symmetric_difference(self, other: SubsetIndex) -> SubsetIndex {
        SubsetIndex(self.0 ^ other.0)
    }

    /// `σ △ {j}`.
    pub fn toggle(self, j: usize) -> SubsetIndex {
        SubsetIndex(self.0 ^ (1 << j))
    }

    pub fn union(self, other: SubsetIndex) -> SubsetIndex {
        SubsetIndex(self.0 | other.0)
    }

    pub fn difference(self, other: SubsetIndex) -> SubsetIndex {
        SubsetIndex(self.0 & !other.0)
    }

    /// `ℕ_n ∖ σ`.
    pub fn complement(self, n: usize) -> SubsetIndex {
        SubsetIndex::full(n).difference(self)
    }

    pub fn is_adjacent(self, other: SubsetIndex) -> bool {
        (self.0 ^ other.0).count_ones() == 1
    }

    /// `E_σ(j) = 2·1_σ(j) − 1`.
    pub fn sign(self, j: usize) -> f64 {
        if self.contains(j) {
            1.0
        } else {
            -1.0
        }
    }

    pub fn elements(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&j| self.0 & (1 << j) != 0)
    }

    /// All subsets of `{0,…,n}` in basis order.
    pub fn all(n: usize) -> impl Iterator<Item = SubsetIndex> {
        (0..(1u32 << (n + 1))).map(SubsetIndex)
    }
}

impl fmt::Debug for SubsetIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, j) in self.elements().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{j}")?;
        }
        f.write_str("}")
    }
}

impl From<u32> for SubsetIndex {
    fn from(bits: u32) -> Self {
        SubsetIndex(bits)
    }
}

/// `h_n`, the span of `{Z_σ : σ ⊆ {0,…,n}}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockSpace {
    n: usize,
}

impl FockSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n > MAX_N {
            return Err(Error::arg(format!("n = {n} exceeds the supported maximum {MAX_N}")));
        }
        Ok(FockSpace { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << (self.n + 1)
    }

    pub fn subsets(&self) -> impl Iterator<Item = SubsetIndex> {
        SubsetIndex::all(self.n)
    }

    pub fn basis_vector(&self, sigma: SubsetIndex) -> Result<StateVector> {
        self.check_subset(sigma)?;
        Ok(StateVector::basis(self.dim(), sigma.index()))
    }

    pub fn check_subset(&self, sigma: SubsetIndex) -> Result<()> {
        if !sigma.is_within(self.n) {
            return Err(Error::arg(format!(
                "subset {sigma:?} is not contained in {{0,…,{}}}",
                self.n
            )));
        }
        Ok(())
    }

    pub fn check_mode(&self, k: usize) -> Result<()> {
        if k > self.n {
            return Err(Error::arg(format!("mode {k} out of range 0..={}", self.n)));
        }
        Ok(())
    }
}

/// `∂_k Z_σ = 1_σ(k) Z_{σ∖k}`.
pub fn annihilation_operator(n: usize, k: usize) -> Result<OperatorMatrix> {
    let space = FockSpace::new(n)?;
    space.check_mode(k)?;
    let trips = space
        .subsets()
        .filter(|s| s.contains(k))
        .map(|s| (s.toggle(k).index(), s.index(), ONE))
        .collect();
    Ok(CsrMatrix::from_triplets(space.dim(), space.dim(), trips)?.into())
}

/// `∂_k* Z_σ = (1 − 1_σ(k)) Z_{σ∪k}`.
pub fn creation_operator(n: usize, k: usize) -> Result<OperatorMatrix> {
    let space = FockSpace::new(n)?;
    space.check_mode(k)?;
    let trips = space
        .subsets()
        .filter(|s| !s.contains(k))
        .map(|s| (s.toggle(k).index(), s.index(), ONE))
        .collect();
    Ok(CsrMatrix::from_triplets(space.dim(), space.dim(), trips)?.into())
}

/// Max-norm residuals of the equal-time canonical anti-commutation relations,
/// each maximized over all admissible `j, k ≤ n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarReport {
    pub n: usize,
    /// `∂_j∂_k − ∂_k∂_j`
    pub annihilators_commute: f64,
    /// `∂_j*∂_k* − ∂_k*∂_j*`
    pub creators_commute: f64,
    /// `∂_j*∂_k − ∂_k∂_j*`, `j ≠ k`
    pub mixed_commute: f64,
    /// `∂_j∂_j`
    pub annihilator_square: f64,
    /// `∂_j*∂_j*`
    pub creator_square: f64,
    /// `∂_j*∂_j + ∂_j∂_j* − I`
    pub anticommutator_identity: f64,
}

impl CarReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.annihilators_commute,
            self.creators_commute,
            self.mixed_commute,
            self.annihilator_square,
            self.creator_square,
            self.anticommutator_identity,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

pub fn verify_car(n: usize) -> Result<CarReport> {
    let space = FockSpace::new(n)?;
    let ann: Vec<OperatorMatrix> = (0..=n).map(|k| annihilation_operator(n, k)).collect::<Result<_>>()?;
    let cre: Vec<OperatorMatrix> = (0..=n).map(|k| creation_operator(n, k)).collect::<Result<_>>()?;
    let id = OperatorMatrix::identity(space.dim());
    let commutator = |a: &OperatorMatrix, b: &OperatorMatrix| a.matmul(b).max_diff(&b.matmul(a));

    let mut report = CarReport {
        n,
        annihilators_commute: 0.0,
        creators_commute: 0.0,
        mixed_commute: 0.0,
        annihilator_square: 0.0,
        creator_square: 0.0,
        anticommutator_identity: 0.0,
    };
    for j in 0..=n {
        report.annihilator_square = report.annihilator_square.max(ann[j].matmul(&ann[j]).max_abs());
        report.creator_square = report.creator_square.max(cre[j].matmul(&cre[j]).max_abs());
        let anti = cre[j].matmul(&ann[j]).add(&ann[j].matmul(&cre[j]));
        report.anticommutator_identity = report.anticommutator_identity.max(anti.max_diff(&id));
        for k in 0..=n {
            if j == k {
                continue;
            }
            report.annihilators_commute = report.annihilators_commute.max(commutator(&ann[j], &ann[k]));
            report.creators_commute = report.creators_commute.max(commutator(&cre[j], &cre[k]));
            report.mixed_commute = report.mixed_commute.max(commutator(&cre[j], &ann[k]));
        }
    }
    Ok(report)
}
