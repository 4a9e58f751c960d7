//! Sparse complex matrices for number-conserving operators.
//!
//! [`SparseMatrix`] is a general row-compressed matrix used while assembling
//! products of bilinears. [`SparseHermitianOperator`] stores only the upper
//! triangle (row <= col) and implies the conjugate entries below the diagonal,
//! so Hermiticity holds by construction.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    /// Per-row `(col, value)` pairs, sorted by column, no explicit zeros.
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl SparseMatrix {
    pub fn zeros(dim: usize) -> Self {
        SparseMatrix {
            dim,
            rows: vec![Vec::new(); dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        SparseMatrix {
            dim,
            rows: (0..dim).map(|i| vec![(i, Complex64::new(1.0, 0.0))]).collect(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        let mut acc: Vec<BTreeMap<usize, Complex64>> = vec![BTreeMap::new(); dim];
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) out of bounds for dim {dim}");
            *acc[r].entry(c).or_insert(ZERO) += v;
        }
        Self::from_row_maps(dim, acc)
    }

    fn from_row_maps(dim: usize, maps: Vec<BTreeMap<usize, Complex64>>) -> Self {
        let rows = maps
            .into_iter()
            .map(|m| m.into_iter().filter(|(_, v)| *v != ZERO).collect())
            .collect();
        SparseMatrix { dim, rows }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.rows[row]
            .binary_search_by_key(&col, |(c, _)| *c)
            .map(|k| self.rows[row][k].1)
            .unwrap_or(ZERO)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let maps = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| {
                let mut m: BTreeMap<usize, Complex64> = BTreeMap::new();
                for &(c, v) in a {
                    m.insert(c, f(v, ZERO));
                }
                for &(c, v) in b {
                    let e = m.entry(c).or_insert(f(ZERO, ZERO));
                    *e = match a.binary_search_by_key(&c, |(k, _)| *k) {
                        Ok(i) => f(a[i].1, v),
                        Err(_) => f(ZERO, v),
                    };
                }
                m
            })
            .collect();
        Self::from_row_maps(self.dim, maps)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        SparseMatrix {
            dim: self.dim,
            rows: self
                .rows
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&(c, v)| (c, v * factor))
                        .filter(|(_, v)| *v != ZERO)
                        .collect()
                })
                .collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let maps = self
            .rows
            .iter()
            .map(|row| {
                let mut m: BTreeMap<usize, Complex64> = BTreeMap::new();
                for &(k, a) in row {
                    for &(c, b) in &other.rows[k] {
                        *m.entry(c).or_insert(ZERO) += a * b;
                    }
                }
                m
            })
            .collect();
        Self::from_row_maps(self.dim, maps)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Complex64 {
        self.triplets().map(|(r, c, v)| v * other.get(c, r)).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other)
            .triplets()
            .map(|(_, _, v)| v.norm())
            .fold(0.0, f64::max)
    }

    /// Largest modulus among the off-diagonal entries.
    pub fn max_off_diagonal(&self) -> f64 {
        self.triplets()
            .filter(|(r, c, _)| r != c)
            .map(|(_, _, v)| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.dim);
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Max-row-sum norm, an upper bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        self.rows
            .iter()
            .map(|row| row.iter().map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Hermitian matrix stored as its upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitianOperator {
    dim: usize,
    /// `(row, col, value)` with `row <= col`, sorted, unique; diagonal values real.
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseHermitianOperator {
    /// Converts a general matrix, failing if it is not Hermitian to within
    /// `tolerance` (absolute, per entry).
    pub fn from_matrix(matrix: &SparseMatrix, tolerance: f64) -> Result<Self> {
        let mismatch = matrix.max_abs_diff(&matrix.adjoint());
        if mismatch > tolerance {
            return Err(Error::ModelInconsistency(format!(
                "matrix is not Hermitian: max |A - A^H| = {mismatch:e}"
            )));
        }
        let entries = matrix
            .triplets()
            .filter(|(r, c, _)| r <= c)
            .map(|(r, c, v)| {
                if r == c {
                    (r, c, Complex64::new(v.re, 0.0))
                } else {
                    // Symmetrize against rounding in the lower triangle.
                    let lower = matrix.get(c, r).conj();
                    (r, c, (v + lower) * 0.5)
                }
            })
            .collect();
        Ok(SparseHermitianOperator {
            dim: matrix.dim(),
            entries,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn to_matrix(&self) -> SparseMatrix {
        SparseMatrix::from_triplets(
            self.dim,
            self.entries.iter().flat_map(|&(r, c, v)| {
                let mirror = (r != c).then_some((c, r, v.conj()));
                std::iter::once((r, c, v)).chain(mirror)
            }),
        )
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] = v;
            m[(c, r)] = v.conj();
        }
        m
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|(_, _, v)| v.im == 0.0)
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.iter_mut().for_each(|v| *v = ZERO);
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
            if r != c {
                y[c] += v.conj() * x[r];
            }
        }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.dim];
        self.apply(x, &mut y);
        y
    }

    /// `<x|H|x>`; real because `H` is Hermitian.
    pub fn expectation(&self, x: &[Complex64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        self.entries
            .iter()
            .map(|&(r, c, v)| {
                let term = x[r].conj() * v * x[c];
                if r == c {
                    term.re
                } else {
                    2.0 * term.re
                }
            })
            .sum()
    }

    pub fn norm_bound(&self) -> f64 {
        let mut sums = vec![0.0; self.dim];
        for &(r, c, v) in &self.entries {
            sums[r] += v.norm();
            if r != c {
                sums[c] += v.norm();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }
}
