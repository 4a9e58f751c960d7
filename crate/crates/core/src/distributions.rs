//! Occupation Husimi function and collective-phase distribution of a state.
//!
//! With `p_j = I_j / N`, averaging `|<N; w|psi>|²` over the phases of `w`
//! removes all cross terms and leaves
//! `Q_I(I1, I2) = sum_n N!/(n1! n2! n3!) p1^n1 p2^n2 p3^n3 |c_n|²`,
//! which stays finite on the whole simplex including its edges.
//! The phase distribution is `Phi(phi1, phi2) = |sum_n e^{i(n1 phi1 + n2 phi2)} c_n|²`.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::coherent::{ln_multinomials, QuantumState};
use crate::error::{Error, Result};
use crate::fock::FockBasis;

/// A sampled coordinate axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub label: String,
    pub values: Vec<f64>,
    /// Whether the last point neighbours the first.
    pub periodic: bool,
}

impl Axis {
    pub fn new(label: &str, values: Vec<f64>) -> Self {
        Axis {
            label: label.into(),
            values,
            periodic: false,
        }
    }

    /// `m` evenly spaced points on `[lo, hi]`.
    pub fn linspace(label: &str, lo: f64, hi: f64, m: usize) -> Self {
        let values = match m {
            0 => vec![],
            1 => vec![lo],
            _ => (0..m).map(|k| lo + (hi - lo) * k as f64 / (m - 1) as f64).collect(),
        };
        Self::new(label, values)
    }

    /// `m` evenly spaced phases `2 pi k / m`, periodic.
    pub fn phases(label: &str, m: usize) -> Self {
        Axis {
            label: label.into(),
            values: (0..m).map(|k| 2.0 * PI * k as f64 / m as f64).collect(),
            periodic: true,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Non-negative field sampled on a tensor grid; `values[(i, j)]` sits at
/// `(axis1[i], axis2[j])`. Points outside `mask` carry 0 and are ignored by
/// the analysis functions.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    pub axis1: Axis,
    pub axis2: Axis,
    pub values: DMatrix<f64>,
    pub mask: Option<DMatrix<bool>>,
    pub metadata: BTreeMap<String, String>,
}

impl ScalarField2D {
    /// Builds a field, clipping round-off negatives (down to `-1e-14 * max`) to 0.
    pub fn new(axis1: Axis, axis2: Axis, values: DMatrix<f64>, mask: Option<DMatrix<bool>>) -> Result<Self> {
        if values.nrows() != axis1.len() || values.ncols() != axis2.len() {
            return Err(Error::InvalidArgument(format!(
                "{}x{} values on a {}x{} grid",
                values.nrows(),
                values.ncols(),
                axis1.len(),
                axis2.len()
            )));
        }
        if let Some(m) = &mask {
            if m.shape() != values.shape() {
                return Err(Error::InvalidArgument("mask shape differs from values".into()));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Consistency("field has non-finite values".into()));
        }
        let max = values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if let Some(v) = values.iter().find(|&&v| v < -1e-14 * max.max(1.0)) {
            return Err(Error::Consistency(format!("field value {v} is negative")));
        }
        Ok(ScalarField2D {
            axis1,
            axis2,
            values: values.map(|v| v.max(0.0)),
            mask,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_metadata(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[(i, j)])
    }

    pub fn max(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.values.nrows() {
            for j in 0..self.values.ncols() {
                if self.is_valid(i, j) {
                    best = best.max(self.values[(i, j)]);
                }
            }
        }
        best
    }

    /// Grid coordinates of the largest valid value.
    pub fn argmax(&self) -> Option<(f64, f64)> {
        let mut best: Option<(usize, usize)> = None;
        for i in 0..self.values.nrows() {
            for j in 0..self.values.ncols() {
                if self.is_valid(i, j) && best.is_none_or(|(a, b)| self.values[(i, j)] > self.values[(a, b)]) {
                    best = Some((i, j));
                }
            }
        }
        best.map(|(i, j)| (self.axis1.values[i], self.axis2.values[j]))
    }
}

fn check_state(state: &QuantumState, basis: &FockBasis) -> Result<()> {
    if state.amplitudes().len() != basis.dimension() || state.n_particles() != basis.total_particles() {
        return Err(Error::InvalidArgument(format!(
            "state with N = {} does not live on the N = {} basis",
            state.n_particles(),
            basis.total_particles()
        )));
    }
    Ok(())
}

/// `Q_I` on the tensor grid `i1_axis x i2_axis`; points with `I1 + I2 > N`
/// or negative occupations are masked.
pub fn husimi_population(
    state: &QuantumState,
    basis: &FockBasis,
    i1_axis: Axis,
    i2_axis: Axis,
) -> Result<ScalarField2D> {
    check_state(state, basis)?;
    let n = basis.total_particles() as f64;
    if n == 0.0 {
        return Err(Error::InvalidArgument("Husimi function needs N >= 1".into()));
    }
    let slack = 1e-12 * n;
    let weights: Vec<([f64; 3], f64)> = basis
        .states()
        .iter()
        .zip(ln_multinomials(basis))
        .zip(state.amplitudes())
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|((occ, lm), c)| (occ.map(|x| x as f64), lm + c.norm_sqr().ln()))
        .collect();
    let rows: Vec<Vec<(f64, bool)>> = i1_axis
        .values
        .par_iter()
        .map(|&i1| {
            i2_axis
                .values
                .iter()
                .map(|&i2| {
                    let i3 = n - i1 - i2;
                    if i1 < -slack || i2 < -slack || i3 < -slack {
                        return (0.0, false);
                    }
                    let p = [i1.max(0.0) / n, i2.max(0.0) / n, i3.max(0.0) / n];
                    let lp = p.map(f64::ln);
                    let mut terms = Vec::with_capacity(weights.len());
                    for (occ, lw) in &weights {
                        let mut t = *lw;
                        for m in 0..3 {
                            if occ[m] > 0.0 {
                                t += occ[m] * lp[m];
                            }
                        }
                        terms.push(t);
                    }
                    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    if top == f64::NEG_INFINITY {
                        return (0.0, true);
                    }
                    let sum: f64 = terms.iter().map(|t| (t - top).exp()).sum();
                    (top.exp() * sum, true)
                })
                .collect()
        })
        .collect();
    let (r, c) = (i1_axis.len(), i2_axis.len());
    let values = DMatrix::from_fn(r, c, |i, j| rows[i][j].0);
    let mask = DMatrix::from_fn(r, c, |i, j| rows[i][j].1);
    Ok(ScalarField2D::new(i1_axis, i2_axis, values, Some(mask))?
        .with_metadata("n_particles", basis.total_particles()))
}

/// Default occupation grid: `m` points on `[0, N]` per axis.
pub fn population_axes(n: usize, m: usize) -> (Axis, Axis) {
    (
        Axis::linspace("I1", 0.0, n as f64, m),
        Axis::linspace("I2", 0.0, n as f64, m),
    )
}

/// `Phi` on the tensor grid `phi1_axis x phi2_axis`.
///
/// With `c_n` indexed by `(n1, n2)`, the sum factorizes:
/// `sum_n1 e^{i n1 phi1} (sum_n2 e^{i n2 phi2} c_{n1 n2})`.
pub fn phase_distribution(
    state: &QuantumState,
    basis: &FockBasis,
    phi1_axis: Axis,
    phi2_axis: Axis,
) -> Result<ScalarField2D> {
    check_state(state, basis)?;
    let n = basis.total_particles();
    let mut c = vec![vec![Complex64::new(0.0, 0.0); n + 1]; n + 1];
    for (occ, amp) in basis.states().iter().zip(state.amplitudes()) {
        c[occ[0]][occ[1]] = *amp;
    }
    // inner[n1][j] = sum_n2 e^{i n2 phi2_j} c[n1][n2]
    let inner: Vec<Vec<Complex64>> = c
        .par_iter()
        .map(|row| {
            phi2_axis
                .values
                .iter()
                .map(|&phi| {
                    let step = Complex64::from_polar(1.0, phi);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for amp in row.iter().rev() {
                        acc = acc * step + amp;
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let rows: Vec<Vec<f64>> = phi1_axis
        .values
        .par_iter()
        .map(|&phi| {
            let step = Complex64::from_polar(1.0, phi);
            (0..phi2_axis.len())
                .map(|j| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for row in inner.iter().rev() {
                        acc = acc * step + row[j];
                    }
                    acc.norm_sqr()
                })
                .collect()
        })
        .collect();
    let values = DMatrix::from_fn(phi1_axis.len(), phi2_axis.len(), |i, j| rows[i][j]);
    Ok(ScalarField2D::new(phi1_axis, phi2_axis, values, None)?.with_metadata("n_particles", n))
}

/// `1 - |<e^{i phi}>|` of the marginal along `axis` (1 or 2); 1 for a flat
/// marginal, 0 for a point mass.
pub fn circular_variance(field: &ScalarField2D, axis: usize) -> Result<f64> {
    let (angles, marginal): (&[f64], Vec<f64>) = match axis {
        1 => (
            &field.axis1.values,
            (0..field.values.nrows())
                .map(|i| (0..field.values.ncols()).filter(|&j| field.is_valid(i, j)).map(|j| field.values[(i, j)]).sum())
                .collect(),
        ),
        2 => (
            &field.axis2.values,
            (0..field.values.ncols())
                .map(|j| (0..field.values.nrows()).filter(|&i| field.is_valid(i, j)).map(|i| field.values[(i, j)]).sum())
                .collect(),
        ),
        _ => return Err(Error::InvalidArgument(format!("axis must be 1 or 2, got {axis}"))),
    };
    let total: f64 = marginal.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Domain("field has no weight".into()));
    }
    let resultant: Complex64 = angles
        .iter()
        .zip(&marginal)
        .map(|(&a, &m)| Complex64::from_polar(m, a))
        .sum();
    Ok(1.0 - resultant.norm() / total)
}

/// Circular variance of the `phi1` marginal of a phase distribution.
pub fn phase_marginal_variance(field: &ScalarField2D) -> Result<f64> {
    circular_variance(field, 1)
}

/// Number of local maxima above `threshold * max(field)`.
///
/// Cells whose values agree to `1e-10 * max` and touch (8-neighbourhood) form
/// one plateau; a plateau counts once if every neighbour outside it is lower.
/// Periodic axes wrap around.
pub fn count_local_maxima(field: &ScalarField2D, threshold: f64) -> Result<usize> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    let (r, c) = field.values.shape();
    let max = field.max();
    if max == 0.0 {
        return Ok(0);
    }
    let tol = 1e-10 * max;
    let neighbours = |i: usize, j: usize| -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(8);
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let step = |x: usize, d: i64, len: usize, periodic: bool| -> Option<usize> {
                    let y = x as i64 + d;
                    if (0..len as i64).contains(&y) {
                        Some(y as usize)
                    } else if periodic && len > 2 {
                        Some(y.rem_euclid(len as i64) as usize)
                    } else {
                        None
                    }
                };
                if let (Some(a), Some(b)) = (step(i, di, r, field.axis1.periodic), step(j, dj, c, field.axis2.periodic)) {
                    if field.is_valid(a, b) {
                        out.push((a, b));
                    }
                }
            }
        }
        out
    };
    let mut seen = DMatrix::from_element(r, c, false);
    let mut count = 0;
    for i in 0..r {
        for j in 0..c {
            if seen[(i, j)] || !field.is_valid(i, j) {
                continue;
            }
            let v0 = field.values[(i, j)];
            let mut plateau = vec![(i, j)];
            let mut queue = VecDeque::from([(i, j)]);
            seen[(i, j)] = true;
            let mut is_max = true;
            while let Some((a, b)) = queue.pop_front() {
                for (x, y) in neighbours(a, b) {
                    let v = field.values[(x, y)];
                    if (v - v0).abs() <= tol {
                        if !seen[(x, y)] {
                            seen[(x, y)] = true;
                            plateau.push((x, y));
                            queue.push_back((x, y));
                        }
                    } else if v > v0 {
                        is_max = false;
                    }
                }
            }
            if is_max && v0 >= threshold * max {
                count += 1;
            }
        }
    }
    Ok(count)
}
