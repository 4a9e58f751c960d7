use num_complex::Complex64;

use super::ClassicalPoint;
use crate::algebra::ModelParams;

/// Per-particle couplings of the classical energy
/// `e(u) = t sum_{i!=j} conj(u_i) u_j + s sum_i |u_i|⁴ - 2 x sum_{i,j,k distinct} |u_i|² conj(u_j) u_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Couplings {
    /// `t = Omega'`.
    pub tunneling: f64,
    /// `s = kappa (N - 1) = chi Omega`.
    pub self_collision: f64,
    /// `x = Lambda (N - 1) = mu Omega`.
    pub cross_collision: f64,
}

/// For each mode, the other two in increasing order. Keeping the same
/// operation order for every mode makes `u1 == u2` survive bitwise.
pub(crate) const OTHERS: [(usize, usize); 3] = [(1, 2), (0, 2), (0, 1)];

impl Couplings {
    pub fn from_params(params: &ModelParams) -> Self {
        let m = (params.n() - 1.0).max(0.0);
        Couplings {
            tunneling: params.omega_eff(),
            self_collision: params.kappa * m,
            cross_collision: params.lambda * m,
        }
    }

    pub fn reduced(omega: f64, chi: f64, mu: f64) -> Self {
        Couplings {
            tunneling: omega * (1.0 + 2.0 * mu),
            self_collision: chi * omega,
            cross_collision: mu * omega,
        }
    }

    /// Magnitude used to scale tolerances.
    pub fn scale(&self) -> f64 {
        (self.tunneling.abs() + self.self_collision.abs() + self.cross_collision.abs())
            .max(f64::MIN_POSITIVE)
    }

    pub fn energy(&self, u: &[Complex64; 3]) -> f64 {
        let sum: Complex64 = u.iter().sum();
        let norm2: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        let hop = sum.norm_sqr() - norm2;
        let quartic: f64 = u.iter().map(|z| z.norm_sqr().powi(2)).sum();
        let cross: f64 = (0..3)
            .map(|m| {
                let (j, k) = OTHERS[m];
                u[m].norm_sqr() * 2.0 * (u[j].conj() * u[k]).re
            })
            .sum();
        self.tunneling * hop + self.self_collision * quartic - 2.0 * self.cross_collision * cross
    }

    /// `de / d(conj u)`.
    pub fn gradient(&self, u: &[Complex64; 3]) -> [Complex64; 3] {
        let t = self.tunneling;
        let s = self.self_collision;
        let x = self.cross_collision;
        std::array::from_fn(|m| {
            let (j, k) = OTHERS[m];
            let (um, uj, uk) = (u[m], u[j], u[k]);
            let cross = um * (2.0 * (uj.conj() * uk).re) + uk * uj.norm_sqr() + uj * uk.norm_sqr();
            (uj + uk) * t + um * (2.0 * s * um.norm_sqr()) - cross * (2.0 * x)
        })
    }
}

/// `<N; w| H |N; w>`, the classical energy (not per particle).
pub fn classical_hamiltonian(point: &ClassicalPoint, params: &ModelParams) -> f64 {
    params.n() * Couplings::from_params(params).energy(&point.orbital())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::hamiltonian_direct;
    use crate::coherent::{coherent_state, CoherentPoint};
    use crate::fock::FockBasis;

    #[test]
    fn symmetric_point_without_interactions() {
        let params = ModelParams::new(-1.3, 0.0, 0.0, 17);
        let e = classical_hamiltonian(&ClassicalPoint::symmetric(), &params);
        assert!((e - 2.0 * -1.3 * 17.0).abs() < 1e-12);
    }

    #[test]
    fn origin_is_pure_self_collision() {
        let params = ModelParams::new(0.0, 0.7, 0.0, 9);
        let e = classical_hamiltonian(&CoherentPoint::real(0.0, 0.0).into(), &params);
        assert!((e - 0.7 * 9.0 * 8.0).abs() < 1e-12);
    }

    #[test]
    fn matches_quantum_expectation() {
        let cases = [
            (ModelParams::new(-1.0, 0.3, 0.2, 5), CoherentPoint::new(Complex64::new(0.3, 0.8), Complex64::new(-1.2, 0.4))),
            (ModelParams::new(0.7, -0.5, 0.9, 2), CoherentPoint::real(2.0, -0.3)),
            (ModelParams::new(-0.4, 1.1, -0.6, 6), CoherentPoint::new(Complex64::new(0.0, 1.5), Complex64::new(0.9, 0.0))),
            (ModelParams::new(1.0, 0.0, 0.5, 1), CoherentPoint::real(0.5, 1.5)),
        ];
        for (params, w) in cases {
            let basis = FockBasis::new(params.n_particles);
            let h = hamiltonian_direct(&basis, &params);
            let exact = coherent_state(&basis, &w).expectation(&h);
            let classical = classical_hamiltonian(&w.into(), &params);
            assert!((exact - classical).abs() < 1e-12, "{exact} vs {classical}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let c = Couplings { tunneling: -0.8, self_collision: 1.7, cross_collision: 0.45 };
        let u = [Complex64::new(0.3, -0.2), Complex64::new(-0.5, 0.6), Complex64::new(0.1, 0.4)];
        let g = c.gradient(&u);
        let h = 1e-6;
        for m in 0..3 {
            let shifted = |dz: Complex64| {
                let mut v = u;
                v[m] += dz;
                c.energy(&v)
            };
            let dx = (shifted(Complex64::new(h, 0.0)) - shifted(Complex64::new(-h, 0.0))) / (2.0 * h);
            let dy = (shifted(Complex64::new(0.0, h)) - shifted(Complex64::new(0.0, -h))) / (2.0 * h);
            // de/d(conj z) = (de/dx + i de/dy) / 2
            let fd = Complex64::new(dx, dy) / 2.0;
            assert!((fd - g[m]).norm() < 1e-8, "mode {m}: {fd} vs {}", g[m]);
        }
    }
}
