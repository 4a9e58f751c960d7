//! SU(3) coherent states and quantum states on the Fock basis.
//!
//! A coherent state is labelled by `w = (w1, w2)` with the gauge `w3 = 1`:
//!
//! `|N; w> = D^{-N/2} sum_n sqrt(N! / (n1! n2! n3!)) w1^n1 w2^n2 |n1, n2, n3>`,
//! `D = |w1|² + |w2|² + 1`.
//!
//! It equals `N` bosons condensed in the single-particle state
//! `(w1, w2, 1) / sqrt(D)`. The canonical chart is
//! `w_j = sqrt(I_j / (N - I1 - I2)) e^{-i phi_j}`.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{FockBasis, Mode};
use crate::sparse::SparseHermitianOperator;

/// Phase-space point of the coherent-state manifold (`w3 = 1` gauge).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentPoint {
    pub w1: Complex64,
    pub w2: Complex64,
}

/// Mean occupations and phase differences `(I1, I2, phi1, phi2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalCoordinates {
    pub i1: f64,
    pub i2: f64,
    pub phi1: f64,
    pub phi2: f64,
}

impl CoherentPoint {
    pub fn new(w1: Complex64, w2: Complex64) -> Self {
        CoherentPoint { w1, w2 }
    }

    pub fn real(w1: f64, w2: f64) -> Self {
        Self::new(Complex64::new(w1, 0.0), Complex64::new(w2, 0.0))
    }

    /// The fully symmetric point `w1 = w2 = 1`.
    pub fn symmetric() -> Self {
        Self::real(1.0, 1.0)
    }

    /// `(w1, w2, 1)`.
    pub fn components(&self) -> [Complex64; 3] {
        [self.w1, self.w2, Complex64::new(1.0, 0.0)]
    }

    pub fn component(&self, mode: Mode) -> Complex64 {
        self.components()[mode.index()]
    }

    pub fn d(&self) -> f64 {
        self.w1.norm_sqr() + self.w2.norm_sqr() + 1.0
    }

    /// Normalized single-particle amplitudes `(w1, w2, 1) / sqrt(D)`.
    pub fn orbital(&self) -> [Complex64; 3] {
        let s = 1.0 / self.d().sqrt();
        self.components().map(|c| c * s)
    }

    /// Point from an arbitrary single-particle orbital; fails when the third
    /// component vanishes (outside the `w3 = 1` chart).
    pub fn from_orbital(orbital: [Complex64; 3]) -> Result<Self> {
        let z3 = orbital[2];
        if z3.norm() < 1e-300 {
            return Err(Error::Domain(
                "orbital has no weight in mode 3; not representable with w3 = 1".into(),
            ));
        }
        Ok(Self::new(orbital[0] / z3, orbital[1] / z3))
    }

    /// Point from canonical coordinates. Requires `I_j >= 0` and `I1 + I2 < N`.
    pub fn from_canonical(c: CanonicalCoordinates, n: f64) -> Result<Self> {
        let i3 = n - c.i1 - c.i2;
        if c.i1 < 0.0 || c.i2 < 0.0 || i3 <= 0.0 {
            return Err(Error::Domain(format!(
                "canonical chart needs I1, I2 >= 0 and I1 + I2 < N (got {}, {}, N = {n})",
                c.i1, c.i2
            )));
        }
        let w = |i: f64, phi: f64| Complex64::from_polar((i / i3).sqrt(), -phi);
        Ok(Self::new(w(c.i1, c.phi1), w(c.i2, c.phi2)))
    }

    pub fn to_canonical(&self, n: f64) -> CanonicalCoordinates {
        let d = self.d();
        CanonicalCoordinates {
            i1: n * self.w1.norm_sqr() / d,
            i2: n * self.w2.norm_sqr() / d,
            phi1: -self.w1.arg(),
            phi2: -self.w2.arg(),
        }
    }

    /// Twin-condensate point `w1 = w2 = tan(theta/2) e^{-i phi} / sqrt(2)`.
    pub fn twin(theta: f64, phi: f64) -> Self {
        let w = Complex64::from_polar((theta / 2.0).tan() / SQRT_2, -phi);
        Self::new(w, w)
    }

    /// Sphere angles `(theta, phi)` of a twin point, `None` off the twin manifold.
    pub fn twin_angles(&self) -> Option<(f64, f64)> {
        if (self.w1 - self.w2).norm() > 1e-12 * (1.0 + self.w1.norm()) {
            return None;
        }
        let tau = self.w1 * SQRT_2;
        Some((2.0 * tau.norm().atan(), -tau.arg()))
    }

    /// Population balance `I_z = (4 I1 - N) / N` of the twin sector.
    pub fn population_balance(&self) -> f64 {
        4.0 * self.w1.norm_sqr() / self.d() - 1.0
    }
}

/// Normalized state on an `N`-particle Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    n_particles: usize,
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    /// Wraps amplitudes and normalizes them.
    pub fn new(basis: &FockBasis, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.dimension() {
            return Err(Error::InvalidArgument(format!(
                "state has {} amplitudes, basis dimension is {}",
                amplitudes.len(),
                basis.dimension()
            )));
        }
        let norm = l2_norm(&amplitudes);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidArgument("state has zero or non-finite norm".into()));
        }
        Ok(QuantumState {
            n_particles: basis.total_particles(),
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    /// Fock state `|n1, n2, n3>`.
    pub fn fock(basis: &FockBasis, occupation: [usize; 3]) -> Result<Self> {
        let index = basis.index_of(&occupation).ok_or_else(|| {
            Error::InvalidArgument(format!("{occupation:?} is not in the N = {} basis", basis.total_particles()))
        })?;
        let mut amps = vec![Complex64::new(0.0, 0.0); basis.dimension()];
        amps[index] = Complex64::new(1.0, 0.0);
        Self::new(basis, amps)
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amplitudes)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QuantumState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn fidelity(&self, other: &QuantumState) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn expectation(&self, op: &SparseHermitianOperator) -> f64 {
        op.expectation(&self.amplitudes)
    }

    /// Fixes the global phase so that the largest-modulus amplitude is real
    /// and positive (first such index on ties).
    pub fn with_canonical_phase(mut self) -> Self {
        let mut best = 0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            if a.norm() > self.amplitudes[best].norm() * (1.0 + 1e-12) {
                best = i;
            }
        }
        let pivot = self.amplitudes[best];
        if pivot.norm() > 0.0 {
            let phase = pivot.conj() / pivot.norm();
            self.amplitudes.iter_mut().for_each(|a| *a *= phase);
        }
        self
    }
}

fn l2_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// `ln k!` for `k = 0..=n`.
pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    table.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

/// `ln (N! / (n1! n2! n3!))` for each basis state.
pub(crate) fn ln_multinomials(basis: &FockBasis) -> Vec<f64> {
    let lf = ln_factorials(basis.total_particles());
    let total = lf[basis.total_particles()];
    basis
        .states()
        .iter()
        .map(|s| total - lf[s[0]] - lf[s[1]] - lf[s[2]])
        .collect()
}

/// `z^n` with `0^0 = 1`, through log-modulus to stay finite for large `n`.
fn power_weight(z: Complex64, n: usize, ln_scale: f64) -> Complex64 {
    if n == 0 {
        return Complex64::from_polar(ln_scale.exp(), 0.0);
    }
    if z.norm() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let nf = n as f64;
    Complex64::from_polar((nf * z.norm().ln() + ln_scale).exp(), nf * z.arg())
}

/// The coherent state `|N; w>` on `basis`.
pub fn coherent_state(basis: &FockBasis, point: &CoherentPoint) -> QuantumState {
    let n = basis.total_particles() as f64;
    let ln_c = -0.5 * n * point.d().ln();
    let amps = basis
        .states()
        .iter()
        .zip(ln_multinomials(basis))
        .map(|(s, ln_m)| {
            power_weight(point.w1, s[0], 0.5 * ln_m + ln_c) * power_weight(point.w2, s[1], 0.0)
        })
        .collect();
    QuantumState {
        n_particles: basis.total_particles(),
        amplitudes: amps,
    }
}

/// Builds `(a†_w)^N |0> / sqrt(N!)` by repeated application of the creation
/// operator `a†_w = (w1 a†_1 + w2 a†_2 + a†_3) / sqrt(D)` and returns its
/// fidelity with [`coherent_state`].
pub fn product_form_check(basis: &FockBasis, point: &CoherentPoint) -> f64 {
    let orbital = point.orbital();
    let mut sector = FockBasis::new(0);
    let mut amps = vec![Complex64::new(1.0, 0.0)];
    for step in 1..=basis.total_particles() {
        let next = FockBasis::new(step);
        let mut out = vec![Complex64::new(0.0, 0.0); next.dimension()];
        for (state, amp) in sector.states().iter().zip(&amps) {
            for mode in Mode::ALL {
                let m = mode.index();
                let mut target = *state;
                target[m] += 1;
                let k = next.index_of(&target).expect("target lies in the next sector");
                out[k] += orbital[m] * *amp * (target[m] as f64).sqrt();
            }
        }
        // Accumulate the 1/sqrt(N!) one factor per creation.
        let s = 1.0 / (step as f64).sqrt();
        amps = out.into_iter().map(|a| a * s).collect();
        sector = next;
    }
    let built = QuantumState {
        n_particles: basis.total_particles(),
        amplitudes: amps,
    };
    built.fidelity(&coherent_state(basis, point))
}

/// `<N; w| a†_i a_j |N; w> = N conj(w_i) w_j / D`.
pub fn expectation_hop_closed_form(point: &CoherentPoint, n: usize, i: Mode, j: Mode) -> Complex64 {
    n as f64 * point.component(i).conj() * point.component(j) / point.d()
}

/// `<a†_i² a_i²> = N (N-1) |w_i|⁴ / D²`.
pub fn expectation_self_pair(point: &CoherentPoint, n: usize, i: Mode) -> f64 {
    let nf = n as f64;
    nf * (nf - 1.0) * point.component(i).norm_sqr().powi(2) / point.d().powi(2)
}

/// `<a†_i a_i a†_j a_k> = N (N-1) |w_i|² conj(w_j) w_k / D²` for distinct `i, j, k`.
pub fn expectation_cross_pair(
    point: &CoherentPoint,
    n: usize,
    i: Mode,
    j: Mode,
    k: Mode,
) -> Result<Complex64> {
    if i == j || j == k || i == k {
        return Err(Error::InvalidArgument("modes must be distinct".into()));
    }
    let nf = n as f64;
    let w = point.components();
    Ok(nf * (nf - 1.0) * w[i.index()].norm_sqr() * w[j.index()].conj() * w[k.index()]
        / point.d().powi(2))
}
