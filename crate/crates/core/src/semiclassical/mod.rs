//! Classical limit of the model on the SU(3) coherent-state manifold.
//!
//! Points are single-particle orbitals `u` with `|u| = 1`, related to the
//! coherent-state label by `w_j = u_j / u_3`. The energy per particle `e(u)`
//! depends on the couplings only through `Omega' = Omega + 2 Lambda (N - 1)`,
//! `kappa (N - 1)` and `Lambda (N - 1)`, and the variational flow
//! `du/dt = -i de/d(conj u)` is free of the singularities of both the `w` chart
//! (at `u_3 = 0`) and the canonical chart (at empty wells).

mod dynamics;
mod energy;
mod fixed_points;
mod transition;

use std::f64::consts::SQRT_2;

use num_complex::Complex64;

use crate::coherent::{CanonicalCoordinates, CoherentPoint};
use crate::error::{Error, Result};

pub use dynamics::{
    equations_of_motion, integrate_trajectory, integrate_trajectory_with, linearize,
    CanonicalVelocity, EquationsOfMotion, IntegratorOptions, Linearization, Stability, Trajectory,
};
pub use energy::{classical_hamiltonian, Couplings};
pub use fixed_points::{
    bifurcation_scan, branch_energies, find_fixed_points, level_crossing, twin_orbital,
    BranchEnergies, FixedPointLabel, FixedPointRecord, TwinProfile, TwinSector, SYMMETRIC_ANGLE,
};
pub use transition::{theta_min_analysis, ThetaMinOptions, ThetaMinRow, ThetaMinTable};

/// Orbitals with `|u_j|²` below this are treated as lying on a chart boundary.
pub const CHART_EPSILON: f64 = 1e-10;

/// A point of the classical phase space, stored as a unit-norm orbital.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalPoint {
    orbital: [Complex64; 3],
}

impl ClassicalPoint {
    /// Normalizes `orbital`; the overall phase is kept as given.
    pub fn from_orbital(orbital: [Complex64; 3]) -> Result<Self> {
        let norm = orbital.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Domain(format!("orbital {orbital:?} cannot be normalized")));
        }
        Ok(ClassicalPoint {
            orbital: orbital.map(|z| z / norm),
        })
    }

    pub fn from_coherent(point: &CoherentPoint) -> Self {
        ClassicalPoint {
            orbital: point.orbital(),
        }
    }

    pub fn from_canonical(c: CanonicalCoordinates, n: f64) -> Result<Self> {
        Ok(Self::from_coherent(&CoherentPoint::from_canonical(c, n)?))
    }

    /// Twin-condensate point with `tau = sqrt(2) w = tan(theta/2) e^{-i phi}`.
    /// `theta = pi` gives the orbital `(e^{-i phi}, e^{-i phi}, 0) / sqrt(2)`.
    pub fn twin(theta: f64, phi: f64) -> Self {
        let a = Complex64::from_polar((theta / 2.0).sin() / SQRT_2, -phi);
        let b = Complex64::new((theta / 2.0).cos(), 0.0);
        ClassicalPoint {
            orbital: [a, a, b],
        }
    }

    /// The fully symmetric point `w1 = w2 = 1`.
    pub fn symmetric() -> Self {
        Self::from_coherent(&CoherentPoint::symmetric())
    }

    pub fn orbital(&self) -> [Complex64; 3] {
        self.orbital
    }

    /// Fractions `I_j / N`.
    pub fn populations(&self) -> [f64; 3] {
        self.orbital.map(|z| z.norm_sqr())
    }

    /// The `w` label, `None` when mode 3 is (numerically) empty.
    pub fn coherent_point(&self) -> Option<CoherentPoint> {
        if self.orbital[2].norm_sqr() < CHART_EPSILON {
            return None;
        }
        CoherentPoint::from_orbital(self.orbital).ok()
    }

    /// `(I1, I2, phi1, phi2)` with `phi_j = arg u_3 - arg u_j`, wrapped to `(-pi, pi]`.
    /// The phases are meaningless for empty wells.
    pub fn canonical(&self, n: f64) -> CanonicalCoordinates {
        let [u1, u2, u3] = self.orbital;
        let phase = |z: Complex64| (u3 * z.conj()).arg();
        CanonicalCoordinates {
            i1: n * u1.norm_sqr(),
            i2: n * u2.norm_sqr(),
            phi1: phase(u1),
            phi2: phase(u2),
        }
    }

    /// `|u1 - u2|` after removing the gauge phase of `u3`.
    pub fn twin_deviation(&self) -> f64 {
        (self.orbital[0] - self.orbital[1]).norm()
    }

    /// Sphere angles `(theta, phi)` of a twin point, `None` off the twin manifold.
    pub fn twin_angles(&self) -> Option<(f64, f64)> {
        if self.twin_deviation() > 1e-9 {
            return None;
        }
        let [u1, _, u3] = self.orbital;
        let a = u1.norm() * SQRT_2;
        let b = u3.norm();
        let theta = 2.0 * a.atan2(b);
        let phi = if u1.norm() == 0.0 || b == 0.0 {
            0.0
        } else {
            (u3 * u1.conj()).arg()
        };
        Some((theta, phi))
    }

    /// Twin-sector population balance `I_z = (4 I1 - N) / N`.
    pub fn population_balance(&self) -> f64 {
        4.0 * self.orbital[0].norm_sqr() - 1.0
    }

    /// Relabels the wells: component `j` of the result is component `perm[j]` of `self`.
    pub fn permuted(&self, perm: [usize; 3]) -> Self {
        ClassicalPoint {
            orbital: perm.map(|j| self.orbital[j]),
        }
    }
}

impl From<CoherentPoint> for ClassicalPoint {
    fn from(point: CoherentPoint) -> Self {
        Self::from_coherent(&point)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_conversions_agree() {
        let p = CoherentPoint::new(Complex64::new(0.4, -0.9), Complex64::new(-1.3, 0.2));
        let c = ClassicalPoint::from_coherent(&p);
        let back = c.coherent_point().unwrap();
        assert!((back.w1 - p.w1).norm() < 1e-12 && (back.w2 - p.w2).norm() < 1e-12);
        let can = c.canonical(30.0);
        let reference = p.to_canonical(30.0);
        assert!((can.i1 - reference.i1).abs() < 1e-12);
        assert!((can.i2 - reference.i2).abs() < 1e-12);
        assert!((can.phi1 - reference.phi1).abs() < 1e-12);
        assert!((can.phi2 - reference.phi2).abs() < 1e-12);
        let again = ClassicalPoint::from_canonical(can, 30.0).unwrap();
        assert!((again.orbital()[0] - c.orbital()[0]).norm() < 1e-12);
    }

    #[test]
    fn twin_angles_roundtrip() {
        for &(theta, phi) in &[(0.3, 0.0), (1.2, 2.0), (2.9, -1.0)] {
            let p = ClassicalPoint::twin(theta, phi);
            let (t, f) = p.twin_angles().unwrap();
            assert!((t - theta).abs() < 1e-12 && (f - phi).abs() < 1e-12);
            assert!((p.population_balance() + theta.cos()).abs() < 1e-14);
            let w = CoherentPoint::twin(theta, phi);
            let q = p.coherent_point().unwrap();
            assert!((q.w1 - w.w1).norm() < 1e-12);
        }
        assert!(ClassicalPoint::twin(std::f64::consts::PI, 0.0).coherent_point().is_none());
    }

    #[test]
    fn symmetric_point_balance() {
        let p = ClassicalPoint::symmetric();
        assert!((p.population_balance() - 1.0 / 3.0).abs() < 1e-15);
        assert!(ClassicalPoint::from_orbital([Complex64::new(0.0, 0.0); 3]).is_err());
    }
}
