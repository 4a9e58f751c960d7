use nalgebra::{DMatrix, SMatrix};
use num_complex::Complex64;

use super::energy::{Couplings, OTHERS};
use super::{ClassicalPoint, CHART_EPSILON};
use crate::algebra::ModelParams;
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `du/dt = -i de/d(conj u)`.
fn orbital_flow(c: &Couplings, u: &[Complex64; 3]) -> [Complex64; 3] {
    c.gradient(u).map(|g| -I * g)
}

/// `(dI1, dI2, dphi1, dphi2) / dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalVelocity {
    pub i1: f64,
    pub i2: f64,
    pub phi1: f64,
    pub phi2: f64,
}

/// Phase-space velocity of the classical flow in each chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquationsOfMotion {
    /// `du/dt` of the unit orbital.
    pub orbital: [Complex64; 3],
    /// `dw/dt`; `None` when mode 3 is empty.
    pub w: Option<[Complex64; 2]>,
    /// Hamilton's equations `dI_j/dt = -dH/dphi_j`, `dphi_j/dt = dH/dI_j`;
    /// `None` when any well is empty.
    pub canonical: Option<CanonicalVelocity>,
}

pub fn equations_of_motion(point: &ClassicalPoint, params: &ModelParams) -> EquationsOfMotion {
    let u = point.orbital();
    let du = orbital_flow(&Couplings::from_params(params), &u);
    let n = params.n();
    let occupied = |j: usize| u[j].norm_sqr() >= CHART_EPSILON;
    let w = occupied(2).then(|| {
        let u3 = u[2];
        [0, 1].map(|j| (du[j] * u3 - u[j] * du[2]) / (u3 * u3))
    });
    let canonical = (0..3).all(occupied).then(|| {
        let rate = |j: usize| du[j] / u[j];
        CanonicalVelocity {
            i1: 2.0 * n * (u[0].conj() * du[0]).re,
            i2: 2.0 * n * (u[1].conj() * du[1]).re,
            phi1: rate(2).im - rate(0).im,
            phi2: rate(2).im - rate(1).im,
        }
    });
    EquationsOfMotion {
        orbital: du,
        w,
        canonical,
    }
}

/// `|de/d(conj u) - lambda u| / scale` with `lambda = Re <u, de/d(conj u)>`: zero
/// exactly at fixed points of the projective flow.
pub(crate) fn stationarity_residual(c: &Couplings, u: &[Complex64; 3]) -> f64 {
    let g = c.gradient(u);
    let lambda: f64 = u.iter().zip(&g).map(|(a, b)| (a.conj() * b).re).sum();
    let r: f64 = g
        .iter()
        .zip(u)
        .map(|(gm, um)| (gm - um * lambda).norm_sqr())
        .sum::<f64>()
        .sqrt();
    r / c.scale()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    /// All linearization eigenvalues purely imaginary.
    StableCenter,
    Unstable,
}

/// Linear stability of a fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    /// Real 6x6 Jacobian of the rotating-frame flow `-i (g(u) - lambda u)`
    /// in the coordinates `(Re u, Im u)`.
    pub jacobian: DMatrix<f64>,
    /// Restriction to the 4-dimensional complement of the norm and phase directions.
    pub reduced: DMatrix<f64>,
    pub eigenvalues: Vec<Complex64>,
    pub stability: Stability,
}

/// Complex derivatives `dg = A du + B d(conj u)` of the gradient.
fn gradient_derivatives(c: &Couplings, u: &[Complex64; 3]) -> ([[Complex64; 3]; 3], [[Complex64; 3]; 3]) {
    let zero = Complex64::new(0.0, 0.0);
    let mut a = [[zero; 3]; 3];
    let mut b = [[zero; 3]; 3];
    let (t, s, x) = (c.tunneling, c.self_collision, c.cross_collision);
    for m in 0..3 {
        let (j, k) = OTHERS[m];
        let (um, uj, uk) = (u[m], u[j], u[k]);
        a[m][j] += t;
        a[m][k] += t;
        a[m][m] += 4.0 * s * um.norm_sqr();
        b[m][m] += 2.0 * s * um * um;
        a[m][m] -= 2.0 * x * 2.0 * (uj.conj() * uk).re;
        a[m][j] -= 2.0 * x * (um * uk.conj() + uj.conj() * uk + uk.norm_sqr());
        b[m][j] -= 2.0 * x * (um * uk + uj * uk);
        a[m][k] -= 2.0 * x * (um * uj.conj() + uj.norm_sqr() + uk.conj() * uj);
        b[m][k] -= 2.0 * x * (um * uj + uk * uj);
    }
    (a, b)
}

/// Two unit vectors orthogonal to `u` and to each other.
fn complement(u: &[Complex64; 3]) -> [[Complex64; 3]; 2] {
    let mut order = [0, 1, 2];
    order.sort_by(|&p, &q| u[p].norm_sqr().total_cmp(&u[q].norm_sqr()));
    let mut basis: Vec<[Complex64; 3]> = vec![*u];
    for &e in &order[..2] {
        let mut v = [Complex64::new(0.0, 0.0); 3];
        v[e] = Complex64::new(1.0, 0.0);
        for q in &basis {
            let overlap: Complex64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for r in 0..3 {
                v[r] -= q[r] * overlap;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        basis.push(v.map(|z| z / norm));
    }
    [basis[1], basis[2]]
}

pub fn linearize(point: &ClassicalPoint, params: &ModelParams) -> Linearization {
    linearize_with(&Couplings::from_params(params), &point.orbital())
}

pub(crate) fn linearize_with(c: &Couplings, u: &[Complex64; 3]) -> Linearization {
    let g = c.gradient(u);
    let lambda: f64 = u.iter().zip(&g).map(|(a, b)| (a.conj() * b).re).sum();
    let (mut a, b) = gradient_derivatives(c, u);
    for (m, row) in a.iter_mut().enumerate() {
        row[m] -= lambda;
    }
    // f = -i (g - lambda u): A_f = -i A, B_f = -i B; df = (A+B) dx + i (A-B) dy.
    let mut jac = DMatrix::zeros(6, 6);
    for r in 0..3 {
        for col in 0..3 {
            let plus = -I * (a[r][col] + b[r][col]);
            let minus = I * (-I * (a[r][col] - b[r][col]));
            jac[(r, col)] = plus.re;
            jac[(3 + r, col)] = plus.im;
            jac[(r, 3 + col)] = minus.re;
            jac[(3 + r, 3 + col)] = minus.im;
        }
    }
    let [e1, e2] = complement(u);
    let columns = [e1, e1.map(|z| I * z), e2, e2.map(|z| I * z)];
    let basis = DMatrix::from_fn(6, 4, |r, col| {
        let z = columns[col][r % 3];
        if r < 3 {
            z.re
        } else {
            z.im
        }
    });
    let reduced = basis.transpose() * &jac * &basis;
    let fixed: SMatrix<f64, 4, 4> = SMatrix::from_iterator(reduced.iter().copied());
    let mut eigenvalues: Vec<Complex64> = fixed.complex_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|p, q| p.im.total_cmp(&q.im).then(p.re.total_cmp(&q.re)));
    let largest = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let stable = largest <= 1e-12 * c.scale()
        || eigenvalues.iter().all(|z| z.re.abs() < 1e-8 * largest);
    Linearization {
        jacobian: jac,
        reduced,
        eigenvalues,
        stability: if stable {
            Stability::StableCenter
        } else {
            Stability::Unstable
        },
    }
}

/// Tolerances of the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest accepted energy change per step, relative to the energy scale.
    pub step_energy_tolerance: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: 1e-12,
            atol: 1e-13,
            step_energy_tolerance: 1e-13,
            max_steps: 10_000_000,
        }
    }
}

/// A sampled classical orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub n_particles: usize,
    pub times: Vec<f64>,
    pub points: Vec<ClassicalPoint>,
    /// Classical energy `H` (not per particle) at each sample.
    pub energies: Vec<f64>,
    /// Energy normalization for `relative_drift`: `max(|H(0)|, N * coupling scale)`.
    pub energy_scale: f64,
    /// `max_t |H(t) - H(0)| / energy_scale`.
    pub relative_drift: f64,
    /// `max_t | |u(t)| - 1 |`.
    pub norm_error: f64,
    /// `max_t |u1(t) - u2(t)|`.
    pub twin_deviation: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn population_balance(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.population_balance()).collect()
    }

    /// Time average of the twin population balance (trapezoid rule on the samples).
    pub fn mean_population_balance(&self) -> f64 {
        let iz = self.population_balance();
        if iz.len() < 2 {
            return iz.first().copied().unwrap_or(f64::NAN);
        }
        let mut area = 0.0;
        for k in 1..iz.len() {
            area += 0.5 * (iz[k] + iz[k - 1]) * (self.times[k] - self.times[k - 1]);
        }
        area / (self.times[iz.len() - 1] - self.times[0])
    }
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

type State = [Complex64; 3];

/// One Dormand-Prince step; returns the 5th-order solution and the error estimate.
fn dp_step(c: &Couplings, y: &State, h: f64) -> (State, State) {
    let mut k = [[Complex64::new(0.0, 0.0); 3]; 7];
    k[0] = orbital_flow(c, y);
    for s in 1..7 {
        let mut stage = *y;
        for (p, kp) in k.iter().enumerate().take(s) {
            let coef = A[s][p];
            if coef != 0.0 {
                for m in 0..3 {
                    stage[m] += kp[m] * (h * coef);
                }
            }
        }
        k[s] = orbital_flow(c, &stage);
    }
    let mut next = *y;
    let mut err = [Complex64::new(0.0, 0.0); 3];
    for (s, ks) in k.iter().enumerate() {
        for m in 0..3 {
            next[m] += ks[m] * (h * B5[s]);
            err[m] += ks[m] * (h * (B5[s] - B4[s]));
        }
    }
    (next, err)
}

/// Integrates the classical flow from `init` to `t_max`, sampling every `dt`.
pub fn integrate_trajectory(
    init: &ClassicalPoint,
    params: &ModelParams,
    t_max: f64,
    dt: f64,
) -> Result<Trajectory> {
    integrate_trajectory_with(init, params, t_max, dt, &IntegratorOptions::default())
}

pub fn integrate_trajectory_with(
    init: &ClassicalPoint,
    params: &ModelParams,
    t_max: f64,
    dt: f64,
    options: &IntegratorOptions,
) -> Result<Trajectory> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max}")));
    }
    if !(dt > 0.0 && dt <= t_max) {
        return Err(Error::InvalidArgument(format!("dt must lie in (0, t_max], got {dt}")));
    }
    let c = Couplings::from_params(params);
    let n = params.n();
    let energy_of = |u: &State| n * c.energy(u);
    let mut y = init.orbital();
    let e0 = energy_of(&y);
    let energy_scale = e0.abs().max(n * c.scale());
    let samples = (t_max / dt).round() as usize;

    let mut out = Trajectory {
        n_particles: params.n_particles,
        times: vec![0.0],
        points: vec![*init],
        energies: vec![e0],
        energy_scale,
        relative_drift: 0.0,
        norm_error: 0.0,
        twin_deviation: init.twin_deviation(),
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let mut t = 0.0;
    let mut h = dt.min(0.05 / c.scale());
    let mut e_prev = e0;
    for sample in 1..=samples {
        let target = if sample == samples { t_max } else { sample as f64 * dt };
        while t < target {
            if out.accepted_steps + out.rejected_steps >= options.max_steps {
                return Err(Error::Integration {
                    t,
                    step: h,
                    reason: format!("step budget of {} exhausted", options.max_steps),
                });
            }
            let remaining = target - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            if step < 1e-14 * t.abs().max(1.0) && !last {
                return Err(Error::Integration {
                    t,
                    step,
                    reason: "step size underflow".into(),
                });
            }
            let (next, err) = dp_step(&c, &y, step);
            let err_norm = (0..3)
                .map(|m| {
                    let sc = options.atol + options.rtol * y[m].norm().max(next[m].norm());
                    err[m].norm() / sc
                })
                .fold(0.0, f64::max);
            let e_next = energy_of(&next);
            let energy_ok = (e_next - e_prev).abs() <= options.step_energy_tolerance * energy_scale;
            if err_norm <= 1.0 && energy_ok {
                t = if last { target } else { t + step };
                y = next;
                e_prev = e_next;
                out.accepted_steps += 1;
                let grow = if err_norm == 0.0 { 5.0 } else { (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    h = step * grow;
                }
            } else {
                out.rejected_steps += 1;
                let shrink = if err_norm > 1.0 { (0.9 * err_norm.powf(-0.2)).clamp(0.1, 0.5) } else { 0.5 };
                h = step * shrink;
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::Integration {
                        t,
                        step: h,
                        reason: "step size underflow".into(),
                    });
                }
            }
        }
        let point = ClassicalPoint { orbital: y };
        let e = energy_of(&y);
        let norm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        out.relative_drift = out.relative_drift.max((e - e0).abs() / energy_scale);
        out.norm_error = out.norm_error.max((norm - 1.0).abs());
        out.twin_deviation = out.twin_deviation.max(point.twin_deviation());
        out.times.push(target);
        out.points.push(point);
        out.energies.push(e);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::CoherentPoint;

    fn params() -> ModelParams {
        ModelParams::new(-1.0, 0.21, 0.07, 30)
    }

    #[test]
    fn symmetric_point_is_stationary() {
        let eom = equations_of_motion(&ClassicalPoint::symmetric(), &params());
        for v in eom.w.unwrap() {
            assert!(v.norm() < 1e-10);
        }
        let c = eom.canonical.unwrap();
        for v in [c.i1, c.i2, c.phi1, c.phi2] {
            assert!(v.abs() < 1e-10);
        }
    }

    #[test]
    fn canonical_flow_is_hamiltonian() {
        use crate::coherent::CanonicalCoordinates;
        use crate::semiclassical::classical_hamiltonian;
        let p = params();
        let n = p.n();
        let point = ClassicalPoint::from_coherent(&CoherentPoint::new(
            Complex64::new(0.6, 0.3),
            Complex64::new(-0.2, 1.1),
        ));
        let base = point.canonical(n);
        let energy = |f: &dyn Fn(&mut CanonicalCoordinates)| {
            let mut q = base;
            f(&mut q);
            classical_hamiltonian(&ClassicalPoint::from_canonical(q, n).unwrap(), &p)
        };
        let h = 1e-5;
        let d = |plus: &dyn Fn(&mut CanonicalCoordinates), minus: &dyn Fn(&mut CanonicalCoordinates)| {
            (energy(plus) - energy(minus)) / (2.0 * h)
        };
        let di1 = d(&|q| q.i1 += h, &|q| q.i1 -= h);
        let di2 = d(&|q| q.i2 += h, &|q| q.i2 -= h);
        let dp1 = d(&|q| q.phi1 += h, &|q| q.phi1 -= h);
        let dp2 = d(&|q| q.phi2 += h, &|q| q.phi2 -= h);
        let v = equations_of_motion(&point, &p).canonical.unwrap();
        assert!((v.i1 + dp1).abs() < 1e-7, "{} vs {}", v.i1, -dp1);
        assert!((v.i2 + dp2).abs() < 1e-7);
        assert!((v.phi1 - di1).abs() < 1e-7, "{} vs {}", v.phi1, di1);
        assert!((v.phi2 - di2).abs() < 1e-7);
    }

    #[test]
    fn w_velocity_matches_orbital_velocity() {
        let point = ClassicalPoint::from_coherent(&CoherentPoint::new(
            Complex64::new(0.2, -0.7),
            Complex64::new(1.4, 0.5),
        ));
        let p = params();
        let eom = equations_of_motion(&point, &p);
        let h = 1e-6;
        let u = point.orbital();
        let advance = |s: f64| {
            let v: [Complex64; 3] = std::array::from_fn(|m| u[m] + eom.orbital[m] * s);
            ClassicalPoint::from_orbital(v).unwrap().coherent_point().unwrap()
        };
        let (fwd, back) = (advance(h), advance(-h));
        let fd = [(fwd.w1 - back.w1) / (2.0 * h), (fwd.w2 - back.w2) / (2.0 * h)];
        let w = eom.w.unwrap();
        for m in 0..2 {
            assert!((fd[m] - w[m]).norm() < 1e-7);
        }
    }

    #[test]
    fn boundary_points_have_no_canonical_velocity() {
        let point = ClassicalPoint::from_orbital([
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ])
        .unwrap();
        let eom = equations_of_motion(&point, &params());
        assert!(eom.canonical.is_none());
        assert!(eom.w.is_some());
        let empty_third = ClassicalPoint::twin(std::f64::consts::PI, 0.0);
        assert!(equations_of_motion(&empty_third, &params()).w.is_none());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let c = Couplings { tunneling: -0.9, self_collision: 1.3, cross_collision: -0.4 };
        let u = [Complex64::new(0.3, 0.1), Complex64::new(-0.5, 0.4), Complex64::new(0.6, -0.35)];
        let lin = linearize_with(&c, &u);
        let g = c.gradient(&u);
        let lambda: f64 = u.iter().zip(&g).map(|(a, b)| (a.conj() * b).re).sum();
        let f = |v: &[Complex64; 3]| {
            let gv = c.gradient(v);
            std::array::from_fn::<Complex64, 3, _>(|m| -I * (gv[m] - v[m] * lambda))
        };
        let h = 1e-6;
        for col in 0..6 {
            let mut plus = u;
            let mut minus = u;
            let dz = if col < 3 { Complex64::new(h, 0.0) } else { Complex64::new(0.0, h) };
            plus[col % 3] += dz;
            minus[col % 3] -= dz;
            let (fp, fm) = (f(&plus), f(&minus));
            for r in 0..3 {
                let d = (fp[r] - fm[r]) / (2.0 * h);
                let scale = lin.jacobian.abs().max();
                assert!((d.re - lin.jacobian[(r, col)]).abs() < 1e-6 * scale);
                assert!((d.im - lin.jacobian[(3 + r, col)]).abs() < 1e-6 * scale);
            }
        }
    }

    #[test]
    fn harmonic_frequency_without_interactions() {
        let p = ModelParams::new(-1.0, 0.0, 0.0, 20);
        let lin = linearize(&ClassicalPoint::symmetric(), &p);
        assert_eq!(lin.stability, Stability::StableCenter);
        for z in &lin.eigenvalues {
            assert!(z.re.abs() < 1e-12);
            assert!((z.im.abs() - 3.0).abs() < 1e-12, "{z}");
        }
        // A small displacement oscillates with period 2 pi / 3.
        let start = ClassicalPoint::from_coherent(&CoherentPoint::real(1.01, 0.995));
        let period = 2.0 * std::f64::consts::PI / 3.0;
        let traj = integrate_trajectory(&start, &p, period, period / 200.0).unwrap();
        let end = traj.points.last().unwrap().coherent_point().unwrap();
        assert!((end.w1 - Complex64::new(1.01, 0.0)).norm() < 1e-9);
        assert!((end.w2 - Complex64::new(0.995, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn stationary_at_symmetric_point() {
        let p = ModelParams::from_reduced(-1.0, 1.5, 0.0, 30).unwrap();
        let traj = integrate_trajectory(&ClassicalPoint::symmetric(), &p, 100.0, 1.0).unwrap();
        for q in &traj.points {
            let w = q.coherent_point().unwrap();
            assert!((w.w1 - Complex64::new(1.0, 0.0)).norm() < 1e-9);
            assert!((w.w2 - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn energy_and_twin_manifold_conserved() {
        let p = ModelParams::from_reduced(-1.0, 3.0, 0.1, 30).unwrap();
        let start = ClassicalPoint::twin(0.9, 0.4);
        let traj = integrate_trajectory(&start, &p, 50.0, 0.1).unwrap();
        assert!(traj.relative_drift < 1e-8, "{}", traj.relative_drift);
        assert_eq!(traj.twin_deviation, 0.0);
        assert!(traj.norm_error < 1e-9);
        assert_eq!(traj.times.len(), 501);
        assert_eq!(*traj.times.last().unwrap(), 50.0);
    }

    #[test]
    fn rejects_bad_times() {
        let p = params();
        let start = ClassicalPoint::symmetric();
        assert!(integrate_trajectory(&start, &p, 0.0, 0.1).is_err());
        assert!(integrate_trajectory(&start, &p, 1.0, 2.0).is_err());
    }

    #[test]
    fn step_budget_is_reported() {
        let opts = IntegratorOptions { max_steps: 3, ..IntegratorOptions::default() };
        let r = integrate_trajectory_with(&ClassicalPoint::twin(1.0, 0.0), &params(), 10.0, 1.0, &opts);
        assert!(matches!(r, Err(Error::Integration { .. })));
    }
}
