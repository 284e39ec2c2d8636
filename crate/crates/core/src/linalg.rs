//! Complex operator storage shared by every module.
//!
//! Operators are kept in compressed sparse row form when they come from the
//! Fock-space constructions (each `∂_k`, each shift, the walk operator), and
//! densified into a [`faer::Mat`] only when an eigensolver or a dense product
//! needs them.

use std::ops::{Deref, DerefMut};

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Compressed sparse row matrix with complex entries.
///
/// Column indices within each row are strictly increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CsrMatrix {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        CsrMatrix {
            rows: dim,
            cols: dim,
            indptr: (0..=dim).collect(),
            indices: (0..dim).collect(),
            values: vec![ONE; dim],
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, C64)>,
    ) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(Error::arg(format!(
                "triplet ({r}, {c}) outside a {rows}x{cols} matrix"
            )));
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        Ok(CsrMatrix {
            rows,
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of stored entries, including any explicit zeros.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => ZERO,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn adjoint(&self) -> CsrMatrix {
        let trips = self.iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        CsrMatrix::from_triplets(self.cols, self.rows, trips).expect("indices in range")
    }

    pub fn scale(&self, s: C64) -> CsrMatrix {
        CsrMatrix {
            values: self.values.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    pub fn add(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let trips = self.iter().chain(other.iter()).collect();
        CsrMatrix::from_triplets(self.rows, self.cols, trips).expect("indices in range")
    }

    pub fn sub(&self, other: &CsrMatrix) -> CsrMatrix {
        self.add(&other.scale(-ONE))
    }

    /// Sparse product using a dense row accumulator.
    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut acc = vec![ZERO; other.cols];
        let mut touched = vec![false; other.cols];
        let mut pattern: Vec<usize> = Vec::new();
        let mut indptr = Vec::with_capacity(self.rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for r in 0..self.rows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !touched[c] {
                        touched[c] = true;
                        pattern.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            pattern.sort_unstable();
            for &c in &pattern {
                indices.push(c);
                values.push(acc[c]);
                acc[c] = ZERO;
                touched[c] = false;
            }
            pattern.clear();
            indptr.push(indices.len());
        }
        CsrMatrix {
            rows: self.rows,
            cols: other.cols,
            indptr,
            indices,
            values,
        }
    }

    /// Kronecker product `self ⊗ other` with row index `i * other.rows + k`.
    pub fn kron(&self, other: &CsrMatrix) -> CsrMatrix {
        let mut trips = Vec::with_capacity(self.nnz() * other.nnz());
        for (i, j, a) in self.iter() {
            for (k, l, b) in other.iter() {
                trips.push((i * other.rows + k, j * other.cols + l, a * b));
            }
        }
        CsrMatrix::from_triplets(self.rows * other.rows, self.cols * other.cols, trips)
            .expect("indices in range")
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut m = Mat::<C64>::zeros(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// A complex linear operator in either sparse or dense storage.
#[derive(Clone, Debug)]
pub enum OperatorMatrix {
    Sparse(CsrMatrix),
    Dense(Mat<C64>),
}

impl From<CsrMatrix> for OperatorMatrix {
    fn from(m: CsrMatrix) -> Self {
        OperatorMatrix::Sparse(m)
    }
}

impl From<Mat<C64>> for OperatorMatrix {
    fn from(m: Mat<C64>) -> Self {
        OperatorMatrix::Dense(m)
    }
}

impl OperatorMatrix {
    pub fn identity(dim: usize) -> Self {
        CsrMatrix::identity(dim).into()
    }

    /// Row-major dense construction; `entries.len()` must equal `rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::arg(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(Mat::from_fn(rows, cols, |i, j| entries[i * cols + j]).into())
    }

    pub fn rows(&self) -> usize {
        match self {
            OperatorMatrix::Sparse(m) => m.rows(),
            OperatorMatrix::Dense(m) => m.nrows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            OperatorMatrix::Sparse(m) => m.cols(),
            OperatorMatrix::Dense(m) => m.ncols(),
        }
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        match self {
            OperatorMatrix::Sparse(m) => m.get(r, c),
            OperatorMatrix::Dense(m) => m[(r, c)],
        }
    }

    pub fn as_sparse(&self) -> Option<&CsrMatrix> {
        match self {
            OperatorMatrix::Sparse(m) => Some(m),
            OperatorMatrix::Dense(_) => None,
        }
    }

    pub fn to_dense(&self) -> Mat<C64> {
        match self {
            OperatorMatrix::Sparse(m) => m.to_dense(),
            OperatorMatrix::Dense(m) => m.clone(),
        }
    }

    pub fn into_dense(self) -> Mat<C64> {
        match self {
            OperatorMatrix::Sparse(m) => m.to_dense(),
            OperatorMatrix::Dense(m) => m,
        }
    }

    /// Row-major copy of all entries.
    pub fn to_row_major(&self) -> Vec<C64> {
        let d = self.to_dense();
        let mut out = Vec::with_capacity(d.nrows() * d.ncols());
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                out.push(d[(i, j)]);
            }
        }
        out
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        match self {
            OperatorMatrix::Sparse(m) => m.matvec(x),
            OperatorMatrix::Dense(m) => {
                assert_eq!(x.len(), m.ncols(), "apply dimension mismatch");
                (0..m.nrows())
                    .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum())
                    .collect()
            }
        }
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        match self {
            OperatorMatrix::Sparse(m) => m.adjoint().into(),
            OperatorMatrix::Dense(m) => m.adjoint().to_owned().into(),
        }
    }

    pub fn scale(&self, s: C64) -> OperatorMatrix {
        match self {
            OperatorMatrix::Sparse(m) => m.scale(s).into(),
            OperatorMatrix::Dense(m) => Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s).into(),
        }
    }

    /// Product `self * rhs`; stays sparse when both operands are sparse.
    pub fn matmul(&self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.cols(), rhs.rows(), "matmul dimension mismatch");
        match (self, rhs) {
            (OperatorMatrix::Sparse(a), OperatorMatrix::Sparse(b)) => a.matmul(b).into(),
            _ => (&self.to_dense() * &rhs.to_dense()).into(),
        }
    }

    pub fn add(&self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!((self.rows(), self.cols()), (rhs.rows(), rhs.cols()));
        match (self, rhs) {
            (OperatorMatrix::Sparse(a), OperatorMatrix::Sparse(b)) => a.add(b).into(),
            _ => (&self.to_dense() + &rhs.to_dense()).into(),
        }
    }

    pub fn sub(&self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.add(&rhs.scale(-ONE))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        match self {
            OperatorMatrix::Sparse(m) => m.max_abs(),
            OperatorMatrix::Dense(m) => max_abs_dense(m),
        }
    }

    /// `‖A − B‖_max`.
    pub fn max_diff(&self, rhs: &OperatorMatrix) -> f64 {
        self.sub(rhs).max_abs()
    }

    /// `‖A*A − I‖_max`, or infinity for non-square input.
    pub fn unitarity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.adjoint()
            .matmul(self)
            .max_diff(&OperatorMatrix::identity(self.rows()))
    }

    /// `‖A − A*‖_max`.
    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_diff(&self.adjoint())
    }
}

pub(crate) fn max_abs_dense(m: &Mat<C64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

/// A vector in one of the Hilbert spaces of the walk.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct StateVector(pub Vec<C64>);

impl StateVector {
    pub fn zeros(dim: usize) -> Self {
        StateVector(vec![ZERO; dim])
    }

    /// Canonical basis vector `e_index`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[index] = ONE;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self, other⟩`, conjugate-linear in the first argument.
    pub fn inner(&self, other: &StateVector) -> C64 {
        assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scaled(&self, s: C64) -> StateVector {
        StateVector(self.0.iter().map(|z| z * s).collect())
    }

    /// Euclidean distance `‖self − other‖`.
    pub fn distance(&self, other: &StateVector) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Tensor product with position-major indexing: `(self ⊗ rhs)[i * rhs.dim() + k]`.
    pub fn tensor(&self, rhs: &StateVector) -> StateVector {
        let mut out = Vec::with_capacity(self.dim() * rhs.dim());
        for a in &self.0 {
            out.extend(rhs.0.iter().map(|b| a * b));
        }
        StateVector(out)
    }

    pub fn normalized(&self) -> Result<StateVector> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::arg("cannot normalize a zero or non-finite vector"));
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }
}

impl Deref for StateVector {
    type Target = [C64];
    fn deref(&self) -> &[C64] {
        &self.0
    }
}

impl DerefMut for StateVector {
    fn deref_mut(&mut self) -> &mut [C64] {
        &mut self.0
    }
}

impl From<Vec<C64>> for StateVector {
    fn from(v: Vec<C64>) -> Self {
        StateVector(v)
    }
}
