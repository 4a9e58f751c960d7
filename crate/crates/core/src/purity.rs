//! su(3) generalized purity of ground states and the finite-size scaling of
//! the quantum critical point it signals.
//!
//! `P = (9/N²) [<Q1>²/3 + <Q2>²/4 + sum_j <P_j>²/12 + sum_k <J_k>²/12]` equals 1
//! exactly on SU(3) coherent states and decreases with particle entanglement.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::algebra::{GeneratorSet, HamiltonianTerms, ModelParams};
use crate::coherent::QuantumState;
use crate::error::{Error, Result};
use crate::fock::FockBasis;
use crate::spectral::ground_state_of;

/// Weights of the squared generator expectations, in `GeneratorSet::all` order,
/// before the overall `9 / N²`.
const WEIGHTS: [f64; 8] = [
    1.0 / 3.0,
    1.0 / 4.0,
    1.0 / 12.0,
    1.0 / 12.0,
    1.0 / 12.0,
    1.0 / 12.0,
    1.0 / 12.0,
    1.0 / 12.0,
];

fn generator_expectations(state: &QuantumState, gens: &GeneratorSet) -> [f64; 8] {
    gens.all().map(|g| state.expectation(g))
}

/// Generalized purity of `state` relative to the su(3) algebra.
pub fn generalized_purity(state: &QuantumState, gens: &GeneratorSet, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "generalized purity is undefined for N = 0".into(),
        ));
    }
    if state.n_particles() != n || gens.q1.dim() != state.amplitudes().len() {
        return Err(Error::InvalidArgument(format!(
            "state on the N = {} basis does not match N = {n}",
            state.n_particles()
        )));
    }
    let nf = n as f64;
    let expect = generator_expectations(state, gens);
    let sum: f64 = expect.iter().zip(WEIGHTS).map(|(e, w)| w * e * e).sum();
    Ok(9.0 / (nf * nf) * sum)
}

/// Purity as the trace of the squared algebra-reduced density operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraPurity {
    /// `K(N)` in `P = K Tr(rho_su3²)`.
    pub normalization: f64,
    /// `Tr(rho_su3²) = sum_j Tr(rho A_j)²` over a trace-orthonormal basis `A_j`.
    pub reduced_trace: f64,
    /// The generalized purity of the same state.
    pub purity: f64,
}

/// Orthonormalizes the generators under `Tr(A B)` on the `N`-particle space,
/// projects `rho = |psi><psi|` onto them, and returns the proportionality
/// constant between the purity and `Tr(rho_su3²)`.
///
/// Proportionality is checked for all states at once: with Gram matrix
/// `G_ab = Tr(G_a G_b)`, `Tr(rho_su3²) = g^T G^{-1} g` where `g_a = <G_a>`, while
/// the purity is `g^T W g`; the two are proportional iff `W G = K · 1`.
pub fn algebra_reduced_purity(state: &QuantumState, basis: &FockBasis) -> Result<AlgebraPurity> {
    let n = basis.total_particles();
    let gens = GeneratorSet::new(basis);
    let mats: Vec<_> = gens.all().iter().map(|g| g.to_matrix()).collect();
    let gram = DMatrix::from_fn(8, 8, |a, b| mats[a].trace_product(&mats[b]).re);
    let nf = n as f64;
    let w = DMatrix::from_fn(8, 8, |a, b| {
        if a == b {
            9.0 / (nf * nf) * WEIGHTS[a]
        } else {
            0.0
        }
    });
    let wg = &w * &gram;
    let k = wg.trace() / 8.0;
    let deviation = (&wg - DMatrix::identity(8, 8) * k).abs().max();
    if !(k.is_finite() && k > 0.0) || deviation > 1e-8 * k.abs() {
        return Err(Error::Consistency(format!(
            "purity is not proportional to Tr(rho_su3^2) (K = {k}, deviation {deviation:e})"
        )));
    }
    let g = DVector::from_iterator(8, generator_expectations(state, &gens));
    let gram_inv = gram
        .try_inverse()
        .ok_or_else(|| Error::Consistency("singular generator Gram matrix".into()))?;
    let reduced_trace = (g.transpose() * gram_inv * &g)[(0, 0)];
    Ok(AlgebraPurity {
        normalization: k,
        reduced_trace,
        purity: generalized_purity(state, &gens, n)?,
    })
}

/// Ground-state purity as a function of `chi` at fixed `Omega`, `mu`, `N`.
///
/// Holds the basis, the Hamiltonian pieces and the generators so that repeated
/// evaluations only rebuild the parameter-dependent combination.
#[derive(Debug, Clone)]
pub struct GroundStatePurity {
    omega: f64,
    mu: f64,
    n: usize,
    basis: FockBasis,
    terms: HamiltonianTerms,
    gens: GeneratorSet,
}

impl GroundStatePurity {
    pub fn new(omega: f64, mu: f64, n: usize) -> Result<Self> {
        ModelParams::from_reduced(omega, 0.0, mu, n)?;
        let basis = FockBasis::new(n);
        Ok(GroundStatePurity {
            omega,
            mu,
            n,
            terms: HamiltonianTerms::new(&basis),
            gens: GeneratorSet::new(&basis),
            basis,
        })
    }

    pub fn n_particles(&self) -> usize {
        self.n
    }

    pub fn at(&self, chi: f64) -> Result<f64> {
        let run = || -> Result<f64> {
            let params = ModelParams::from_reduced(self.omega, chi, self.mu, self.n)?;
            let h = self.terms.assemble(&params);
            let (_, psi) = ground_state_of(&self.basis, &h)?;
            generalized_purity(&psi, &self.gens, self.n)
        };
        run().map_err(|e| Error::at_chi(chi, e))
    }
}

/// Ground-state purity on a grid of `chi`, with centered differences.
#[derive(Debug, Clone, PartialEq)]
pub struct PurityScan {
    pub omega: f64,
    pub mu: f64,
    pub n_particles: usize,
    pub chi_grid: Vec<f64>,
    pub purity: Vec<f64>,
    /// `dP/dchi` on interior points; `None` at the two endpoints.
    pub derivative: Vec<Option<f64>>,
}

fn check_ascending(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty chi grid".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("chi grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Centered differences `(f[i+1] - f[i-1]) / (x[i+1] - x[i-1])` on interior points.
pub fn centered_differences(x: &[f64], f: &[f64]) -> Vec<Option<f64>> {
    (0..x.len())
        .map(|i| {
            (i > 0 && i + 1 < x.len()).then(|| (f[i + 1] - f[i - 1]) / (x[i + 1] - x[i - 1]))
        })
        .collect()
}

pub fn purity_scan(omega: f64, mu: f64, n: usize, chi_grid: &[f64]) -> Result<PurityScan> {
    check_ascending(chi_grid)?;
    let evaluator = GroundStatePurity::new(omega, mu, n)?;
    let purity = chi_grid
        .par_iter()
        .map(|&chi| evaluator.at(chi))
        .collect::<Result<Vec<f64>>>()?;
    Ok(PurityScan {
        omega,
        mu,
        n_particles: n,
        derivative: centered_differences(chi_grid, &purity),
        chi_grid: chi_grid.to_vec(),
        purity,
    })
}

/// Search settings for the minimum of `dP/dchi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalSearch {
    pub window: (f64, f64),
    /// Spacing of the initial scan.
    pub coarse_step: f64,
    /// Half-width `h` of the centered difference `(P(chi+h) - P(chi-h)) / 2h`.
    pub fd_step: f64,
    /// Final bracket width.
    pub tolerance: f64,
}

impl Default for CriticalSearch {
    fn default() -> Self {
        CriticalSearch {
            window: (1.9, 3.0),
            coarse_step: 0.01,
            fd_step: 0.005,
            tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub chi: f64,
    /// `dP/dchi` at the minimizer.
    pub min_derivative: f64,
    pub evaluations: usize,
}

/// Minimizer of the centered-difference derivative of `purity` over the
/// search window: a uniform scan, then golden-section refinement inside the
/// bracket around the lowest scan point.
pub fn minimize_derivative<F>(purity: F, search: &CriticalSearch) -> Result<CriticalPoint>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let (lo, hi) = search.window;
    let h = search.fd_step;
    if !(hi > lo) || search.coarse_step <= 0.0 || h <= 0.0 || search.tolerance <= 0.0 {
        return Err(Error::InvalidArgument(format!("invalid critical search {search:?}")));
    }
    let steps = ((hi - lo) / search.coarse_step).round() as usize;
    if steps < 2 {
        return Err(Error::InvalidArgument("search window holds fewer than 3 points".into()));
    }
    let centers: Vec<f64> = (0..=steps).map(|i| lo + i as f64 * search.coarse_step).collect();

    // Purity samples at every chi +- h, shared where they coincide.
    let mut samples: Vec<f64> = centers.iter().flat_map(|&c| [c - h, c + h]).collect();
    samples.sort_by(f64::total_cmp);
    samples.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let values = samples
        .par_iter()
        .map(|&x| purity(x))
        .collect::<Result<Vec<f64>>>()?;
    let lookup = |x: f64| -> f64 {
        let k = samples.partition_point(|&s| s < x - 1e-12);
        values[k]
    };
    let coarse: Vec<f64> = centers
        .iter()
        .map(|&c| (lookup(c + h) - lookup(c - h)) / (2.0 * h))
        .collect();
    let best = coarse
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    if best == 0 || best == steps {
        return Err(Error::Bracketing(format!(
            "dP/dchi minimum lies on the window boundary chi = {} (window [{lo}, {hi}])",
            centers[best]
        )));
    }

    let derivative = |x: f64| -> Result<f64> {
        let (a, b) = rayon::join(|| purity(x + h), || purity(x - h));
        Ok((a? - b?) / (2.0 * h))
    };
    let mut evaluations = samples.len();
    let (mut a, mut b) = (centers[best - 1], centers[best + 1]);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = derivative(x1)?;
    let mut f2 = derivative(x2)?;
    evaluations += 4;
    while b - a > search.tolerance {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = derivative(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = derivative(x2)?;
        }
        evaluations += 2;
    }
    let (chi, value) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    let centre = coarse[best];
    let (chi, min_derivative) = if centre < value {
        (centers[best], centre)
    } else {
        (chi, value)
    };
    Ok(CriticalPoint {
        chi,
        min_derivative,
        evaluations,
    })
}

/// Scalable quantum critical parameter: the `chi` minimizing the ground-state
/// `dP/dchi` at particle number `n`.
pub fn critical_chi_q(omega: f64, mu: f64, n: usize, search: &CriticalSearch) -> Result<CriticalPoint> {
    let evaluator = GroundStatePurity::new(omega, mu, n)?;
    minimize_derivative(|chi| evaluator.at(chi), search)
}

/// Least-squares line through `(ln N, ln(chi_q - chi_c))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub n_values: Vec<usize>,
    pub chi_cq: Vec<f64>,
    pub chi_c: f64,
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub ln_prefactor: f64,
    pub ln_prefactor_stderr: f64,
    /// `ln(chi_q - chi_c)` minus the fitted line, per point.
    pub residuals: Vec<f64>,
}

impl ScalingFit {
    /// Fitted `chi_q(N)`.
    pub fn predict(&self, n: f64) -> f64 {
        self.chi_c + (self.ln_prefactor + self.exponent * n.ln()).exp()
    }
}

pub fn power_law_fit(n_values: &[usize], chi_cq: &[f64], chi_c: f64) -> Result<ScalingFit> {
    if n_values.len() != chi_cq.len() {
        return Err(Error::InvalidArgument("N list and chi_q list differ in length".into()));
    }
    let mut distinct = n_values.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "power-law fit needs at least 3 distinct N values, got {}",
            distinct.len()
        )));
    }
    if let Some((n, c)) = n_values.iter().zip(chi_cq).find(|(_, &c)| c <= chi_c) {
        return Err(Error::Domain(format!(
            "chi_q({n}) = {c} is not above chi_c = {chi_c}; logarithm undefined"
        )));
    }
    if n_values.contains(&0) {
        return Err(Error::Domain("N = 0 in scaling data".into()));
    }
    let x: Vec<f64> = n_values.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = chi_cq.iter().map(|&c| (c - chi_c).ln()).collect();
    let m = x.len() as f64;
    let xm = x.iter().sum::<f64>() / m;
    let ym = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let residuals: Vec<f64> = x.iter().zip(&y).map(|(a, b)| b - (intercept + slope * a)).collect();
    let s2 = residuals.iter().map(|r| r * r).sum::<f64>() / (m - 2.0);
    Ok(ScalingFit {
        n_values: n_values.to_vec(),
        chi_cq: chi_cq.to_vec(),
        chi_c,
        exponent: slope,
        exponent_stderr: (s2 / sxx).sqrt(),
        ln_prefactor: intercept,
        ln_prefactor_stderr: (s2 * (1.0 / m + xm * xm / sxx)).sqrt(),
        residuals,
    })
}
