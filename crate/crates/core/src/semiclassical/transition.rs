//! Global minimum of the energy per particle on the twin circle as a function
//! of `chi`, written as `e(theta; chi) = e0(theta) + chi e1(theta)` with
//! `e1 = de/dchi = Omega sum_i u_i⁴` at fixed `Omega`, `mu`.
//!
//! On a smooth branch `de_min/dchi = e1(theta_min)` and
//! `d²e_min/dchi² = e1'(theta_min) dtheta_min/dchi`, where
//! `dtheta_min/dchi = -e1'(theta_min) / e''(theta_min)`.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::fixed_points::{FixedPointLabel, TwinProfile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaMinOptions {
    /// Half-width of the centered difference for the first derivative.
    pub fd_step: f64,
    /// Step of the three-point second difference.
    pub fd_step_second: f64,
    /// Two minima closer than this (relative to the coupling scale) are degenerate.
    pub degeneracy_tolerance: f64,
}

impl Default for ThetaMinOptions {
    fn default() -> Self {
        ThetaMinOptions {
            fd_step: 1e-4,
            fd_step_second: 1e-3,
            degeneracy_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaMinRow {
    pub chi: f64,
    pub theta_min: f64,
    /// `0` or `pi`.
    pub phi_min: f64,
    /// Fixed point realizing the minimum.
    pub branch: FixedPointLabel,
    /// Minimum energy per particle.
    pub energy_min: f64,
    /// `-e1'(theta_min) / e''(theta_min)`, signed for `theta = |s|`.
    pub dtheta_dchi: f64,
    /// `e1(theta_min)`.
    pub d_energy: f64,
    pub d_energy_fd: f64,
    /// `e1'(theta_min)² / -e''(theta_min)`.
    pub d2_energy: f64,
    pub d2_energy_fd: f64,
    /// Another critical point is equally low: the row sits on the crossing.
    pub degenerate: bool,
    /// The minimizing branch differs from the previous row's, so `theta_min`
    /// jumps in between.
    pub jump: bool,
    /// The minimizer changes branch inside the finite-difference stencil, so
    /// the `_fd` columns are not derivatives.
    pub stencil_crosses_branch: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaMinTable {
    pub omega: f64,
    pub mu: f64,
    pub rows: Vec<ThetaMinRow>,
}

impl ThetaMinTable {
    /// Consecutive `(chi, chi')` between which `theta_min` jumps.
    pub fn discontinuities(&self) -> Vec<(f64, f64)> {
        self.rows
            .windows(2)
            .filter(|w| w[1].jump)
            .map(|w| (w[0].chi, w[1].chi))
            .collect()
    }
}

struct Minimum {
    s: f64,
    branch: FixedPointLabel,
    energy: f64,
    degenerate: bool,
}

fn global_minimum(profile: &TwinProfile, tolerance: f64) -> Minimum {
    let mut crit: Vec<(f64, FixedPointLabel, f64)> = profile
        .labelled_angles()
        .into_iter()
        .map(|(s, label)| (s, label, profile.energy(s)))
        .collect();
    crit.sort_by(|a, b| a.2.total_cmp(&b.2));
    let (s, branch, energy) = crit[0];
    let degenerate = crit
        .iter()
        .skip(1)
        .any(|&(t, _, e)| (e - energy).abs() <= tolerance && (t - s).abs() > 1e-6);
    Minimum {
        s,
        branch,
        energy,
        degenerate,
    }
}

/// Minimizer of the twin-circle energy per particle for each `chi` in `chi_grid`.
///
/// The search covers the whole real twin circle, so `theta_min` is unique up
/// to the three equivalent sectors, of which the `w1 = w2` one is reported.
pub fn theta_min_analysis(
    omega: f64,
    mu: f64,
    chi_grid: &[f64],
    options: &ThetaMinOptions,
) -> Result<ThetaMinTable> {
    if omega == 0.0 {
        return Err(Error::InvalidArgument("theta_min analysis needs Omega != 0".into()));
    }
    if chi_grid.is_empty() {
        return Err(Error::InvalidArgument("empty chi grid".into()));
    }
    let tol = options.degeneracy_tolerance * TwinProfile::reduced(omega, 1.0, mu).couplings.scale();
    let at = |chi: f64| global_minimum(&TwinProfile::reduced(omega, chi, mu), tol);
    let mut rows: Vec<ThetaMinRow> = chi_grid
        .par_iter()
        .map(|&chi| {
            let profile = TwinProfile::reduced(omega, chi, mu);
            let m = at(chi);
            let h = options.fd_step;
            let h2 = options.fd_step_second;
            let stencil = [at(chi - h), at(chi + h), at(chi - h2), at(chi + h2)];
            let crosses = stencil.iter().any(|q| q.branch != m.branch);
            let [_, dq, _] = TwinProfile::quartic(m.s);
            let e1 = omega * TwinProfile::quartic(m.s)[0];
            let de1 = omega * dq;
            let curvature = profile.derivatives(m.s)[2];
            ThetaMinRow {
                chi,
                theta_min: m.s.abs(),
                phi_min: if m.s < 0.0 { PI } else { 0.0 },
                branch: m.branch,
                energy_min: m.energy,
                dtheta_dchi: -m.s.signum() * de1 / curvature,
                d_energy: e1,
                d_energy_fd: (stencil[1].energy - stencil[0].energy) / (2.0 * h),
                d2_energy: -de1 * de1 / curvature,
                d2_energy_fd: (stencil[3].energy - 2.0 * m.energy + stencil[2].energy) / (h2 * h2),
                degenerate: m.degenerate,
                jump: false,
                stencil_crosses_branch: crosses,
            }
        })
        .collect();
    for k in 1..rows.len() {
        rows[k].jump = rows[k].branch != rows[k - 1].branch;
    }
    Ok(ThetaMinTable { omega, mu, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn first_derivative_identity_off_transition() {
        let chis: Vec<f64> = grid(0.2, 4.0, 39)
            .into_iter()
            .filter(|c| !(1.95..=2.05).contains(c))
            .collect();
        let table = theta_min_analysis(-1.0, 0.0, &chis, &ThetaMinOptions::default()).unwrap();
        for r in &table.rows {
            assert!(!r.stencil_crosses_branch);
            assert!((r.d_energy - r.d_energy_fd).abs() < 1e-6, "{r:?}");
            assert!((r.d2_energy - r.d2_energy_fd).abs() < 1e-5, "{r:?}");
        }
    }

    #[test]
    fn theta_jumps_at_crossing() {
        let chis = grid(1.5, 2.5, 21);
        let table = theta_min_analysis(-1.0, 0.0, &chis, &ThetaMinOptions::default()).unwrap();
        let jumps = table.discontinuities();
        assert_eq!(jumps.len(), 1, "{:#?}", table.rows.iter().map(|r| (r.chi, r.branch, r.theta_min)).collect::<Vec<_>>());
        let (a, b) = jumps[0];
        assert!(a <= 2.0 && b >= 2.0);
        let before = table.rows.iter().find(|r| r.chi == a).unwrap();
        let after = table.rows.iter().find(|r| r.chi == b).unwrap();
        assert!((before.theta_min - after.theta_min).abs() > 0.1);
        assert!(table.rows.iter().take_while(|r| r.chi < 2.0).all(|r| (r.theta_min - 1.9106).abs() < 1e-3));
    }

    #[test]
    fn degenerate_row_at_exact_crossing() {
        let table = theta_min_analysis(-1.0, 0.0, &[2.0], &ThetaMinOptions::default()).unwrap();
        let r = table.rows[0];
        assert!(r.degenerate);
        assert!(r.stencil_crosses_branch);
        assert!((r.energy_min + 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn first_derivative_jumps() {
        let opts = ThetaMinOptions::default();
        let t = theta_min_analysis(-1.0, 0.0, &[1.999, 2.001], &opts).unwrap();
        let jump = t.rows[1].d_energy - t.rows[0].d_energy;
        assert!(jump.abs() > 0.1, "{jump}");
    }
}
