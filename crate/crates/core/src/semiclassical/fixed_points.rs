//! Fixed points on the real twin circle `u = (a, a, b)`,
//! `a = sin(s/2) / sqrt(2)`, `b = cos(s/2)`, `s in (-pi, pi]`.
//!
//! `s > 0` is the `phi = 0` half (`w = tan(s/2) / sqrt(2) > 0`) and `s < 0` the
//! `phi = pi` half, with `theta = |s|` and `I_z = -cos s`. Every critical point
//! of the energy restricted to the circle is a fixed point of the full flow,
//! since the circle is the fixed set of the symmetry `u1 <-> u2`, `u -> conj u`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use super::dynamics::{linearize_with, stationarity_residual, Stability};
use super::energy::Couplings;
use super::ClassicalPoint;
use crate::algebra::ModelParams;
use crate::error::{Error, Result};

/// Twin-circle angle of the symmetric point `w1 = w2 = 1`, `2 atan(sqrt 2)`.
pub const SYMMETRIC_ANGLE: f64 = 1.910_633_236_249_018_6;

const GRID: usize = 8192;

/// Orbital at twin-circle angle `s`.
pub fn twin_orbital(s: f64) -> [Complex64; 3] {
    let a = Complex64::new((s / 2.0).sin() / SQRT_2, 0.0);
    let b = Complex64::new((s / 2.0).cos(), 0.0);
    [a, a, b]
}

/// `a`, `b` and their first two derivatives in `s`.
struct Circle {
    a: f64,
    b: f64,
    da: f64,
    db: f64,
    dda: f64,
    ddb: f64,
}

impl Circle {
    fn at(s: f64) -> Self {
        let (sin, cos) = (s / 2.0).sin_cos();
        let a = sin / SQRT_2;
        let b = cos;
        Circle {
            a,
            b,
            da: b / (2.0 * SQRT_2),
            db: -a / SQRT_2,
            dda: -a / 4.0,
            ddb: -b / 4.0,
        }
    }

    /// Value, first and second derivative along `s` of a polynomial given by
    /// its value, gradient and Hessian in `(a, b)`.
    fn chain(&self, f: f64, fa: f64, fb: f64, faa: f64, fab: f64, fbb: f64) -> [f64; 3] {
        let d1 = fa * self.da + fb * self.db;
        let d2 = faa * self.da * self.da
            + 2.0 * fab * self.da * self.db
            + fbb * self.db * self.db
            + fa * self.dda
            + fb * self.ddb;
        [f, d1, d2]
    }

    /// `sum_{i!=j} u_i u_j = 2a² + 4ab`.
    fn hop(&self) -> [f64; 3] {
        let (a, b) = (self.a, self.b);
        self.chain(2.0 * a * a + 4.0 * a * b, 4.0 * a + 4.0 * b, 4.0 * a, 4.0, 4.0, 0.0)
    }

    /// `sum_i u_i⁴ = 2a⁴ + b⁴`.
    fn quartic(&self) -> [f64; 3] {
        let (a, b) = (self.a, self.b);
        self.chain(
            2.0 * a.powi(4) + b.powi(4),
            8.0 * a.powi(3),
            4.0 * b.powi(3),
            24.0 * a * a,
            0.0,
            12.0 * b * b,
        )
    }

    /// `sum_{i,j,k distinct} u_i² u_j u_k = 4a³b + 2a²b²`.
    fn cross(&self) -> [f64; 3] {
        let (a, b) = (self.a, self.b);
        self.chain(
            4.0 * a.powi(3) * b + 2.0 * a * a * b * b,
            12.0 * a * a * b + 4.0 * a * b * b,
            4.0 * a.powi(3) + 4.0 * a * a * b,
            24.0 * a * b + 4.0 * b * b,
            12.0 * a * a + 8.0 * a * b,
            4.0 * a * a,
        )
    }
}

/// Energy per particle along the real twin circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwinProfile {
    pub couplings: Couplings,
    /// `-sign(Omega)`: energies times this order the branches, so that with
    /// `Omega < 0` "deeper" means lower energy.
    orientation: f64,
}

impl TwinProfile {
    pub fn new(params: &ModelParams) -> Self {
        Self::with_couplings(Couplings::from_params(params), params.omega)
    }

    pub fn reduced(omega: f64, chi: f64, mu: f64) -> Self {
        Self::with_couplings(Couplings::reduced(omega, chi, mu), omega)
    }

    fn with_couplings(couplings: Couplings, omega: f64) -> Self {
        TwinProfile {
            couplings,
            orientation: if omega > 0.0 { -1.0 } else { 1.0 },
        }
    }

    /// `[e, de/ds, d²e/ds²]`.
    pub fn derivatives(&self, s: f64) -> [f64; 3] {
        let c = Circle::at(s);
        let (hop, quartic, cross) = (c.hop(), c.quartic(), c.cross());
        let k = &self.couplings;
        std::array::from_fn(|d| {
            k.tunneling * hop[d] + k.self_collision * quartic[d] - 2.0 * k.cross_collision * cross[d]
        })
    }

    pub fn energy(&self, s: f64) -> f64 {
        self.derivatives(s)[0]
    }

    pub fn slope(&self, s: f64) -> f64 {
        self.derivatives(s)[1]
    }

    /// `[sum u⁴, d/ds, d²/ds²]` along the circle.
    pub fn quartic(s: f64) -> [f64; 3] {
        Circle::at(s).quartic()
    }

    /// Ordering key: smaller is deeper.
    fn depth(&self, s: f64) -> f64 {
        self.orientation * self.energy(s)
    }

    /// All critical angles in `(-pi, pi]`, ascending, including the symmetric point.
    pub fn critical_angles(&self) -> Vec<f64> {
        let mut roots = self.nonsymmetric_roots();
        roots.push(SYMMETRIC_ANGLE);
        roots.sort_by(f64::total_cmp);
        roots
    }

    /// Critical angles other than `SYMMETRIC_ANGLE`.
    ///
    /// The slope always vanishes at the symmetric point, so it is divided out:
    /// `slope(s) / sin((s - s1)/2)` is smooth and free of that root on the open
    /// interval `(s1 - 2 pi, s1)`, which covers the circle once.
    fn nonsymmetric_roots(&self) -> Vec<f64> {
        let s1 = SYMMETRIC_ANGLE;
        let reduced = |s: f64| self.slope(s) / ((s - s1) / 2.0).sin();
        let step = 2.0 * PI / GRID as f64;
        let lo = s1 - 2.0 * PI;
        let xs: Vec<f64> = (0..GRID).map(|i| lo + (i as f64 + 0.5) * step).collect();
        let fs: Vec<f64> = xs.iter().map(|&s| reduced(s)).collect();
        let mut roots = Vec::new();
        for i in 0..GRID {
            if fs[i] == 0.0 {
                roots.push(xs[i]);
                continue;
            }
            if i + 1 < GRID && fs[i] * fs[i + 1] < 0.0 {
                let (mut a, mut b, mut fa) = (xs[i], xs[i + 1], fs[i]);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    let fm = reduced(m);
                    if fm == 0.0 {
                        a = m;
                        b = m;
                        break;
                    }
                    if fa * fm < 0.0 {
                        b = m;
                    } else {
                        a = m;
                        fa = fm;
                    }
                }
                roots.push(0.5 * (a + b));
            }
        }
        roots
            .into_iter()
            .map(|s| if s <= -PI { s + 2.0 * PI } else { s })
            .collect()
    }

    /// Critical angles on the `phi = 0` half other than the symmetric point,
    /// deepest first.
    fn positive_branch(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.nonsymmetric_roots().into_iter().filter(|&s| s > 0.0).collect();
        v.sort_by(|&p, &q| self.depth(p).total_cmp(&self.depth(q)));
        v
    }

    fn negative_branch(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.nonsymmetric_roots().into_iter().filter(|&s| s <= 0.0).collect();
        v.sort_by(|&p, &q| self.depth(p).total_cmp(&self.depth(q)));
        v
    }

    /// Critical angles with their labels.
    pub fn labelled_angles(&self) -> Vec<(f64, FixedPointLabel)> {
        let mut out = vec![(SYMMETRIC_ANGLE, FixedPointLabel::OnePlus)];
        for (k, s) in self.negative_branch().into_iter().enumerate() {
            out.push((s, if k == 0 { FixedPointLabel::TwoPlus } else { FixedPointLabel::Other }));
        }
        for (k, s) in self.positive_branch().into_iter().enumerate() {
            let label = match k {
                0 => FixedPointLabel::FourPlus,
                1 => FixedPointLabel::ThreePlus,
                _ => FixedPointLabel::Other,
            };
            out.push((s, label));
        }
        out
    }
}

/// Names of the twin-sector fixed points.
///
/// `1+` is the symmetric point. `2+` is the deepest critical point on the
/// `phi = pi` half. On the `phi = 0` half, the pair born in the saddle-node
/// bifurcation is `4+` (deeper, stable) and `3+` (shallower). "Deeper" means
/// lower energy for `Omega < 0` and higher energy for `Omega > 0`, where the
/// flow is the time reversal of the `Omega < 0` flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FixedPointLabel {
    OnePlus,
    TwoPlus,
    ThreePlus,
    FourPlus,
    Other,
}

impl fmt::Display for FixedPointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FixedPointLabel::OnePlus => "1+",
            FixedPointLabel::TwoPlus => "2+",
            FixedPointLabel::ThreePlus => "3+",
            FixedPointLabel::FourPlus => "4+",
            FixedPointLabel::Other => "other",
        })
    }
}

/// Which pair of wells carries equal amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TwinSector {
    /// `w1 = w2`.
    Wells12,
    /// `w1 = 1`.
    Wells13,
    /// `w2 = 1`.
    Wells23,
}

impl TwinSector {
    pub const ALL: [TwinSector; 3] = [TwinSector::Wells12, TwinSector::Wells13, TwinSector::Wells23];

    /// Permutation taking the `(a, a, b)` representative into this sector.
    fn permutation(self) -> [usize; 3] {
        match self {
            TwinSector::Wells12 => [0, 1, 2],
            TwinSector::Wells13 => [0, 2, 1],
            TwinSector::Wells23 => [2, 0, 1],
        }
    }
}

impl fmt::Display for TwinSector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TwinSector::Wells12 => "w1=w2",
            TwinSector::Wells13 => "w1=1",
            TwinSector::Wells23 => "w2=1",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointRecord {
    pub label: FixedPointLabel,
    /// `None` for the symmetric point, which lies in every sector.
    pub sector: Option<TwinSector>,
    pub location: ClassicalPoint,
    /// Twin-circle angle of the `w1 = w2` representative.
    pub twin_angle: f64,
    pub energy_per_particle: f64,
    pub stability: Stability,
    pub eigenvalues: Vec<Complex64>,
    /// Scaled gradient norm at `location`.
    pub residual: f64,
}

impl FixedPointRecord {
    /// `(theta, phi)` of the `w1 = w2` representative.
    pub fn twin_coordinates(&self) -> (f64, f64) {
        (self.twin_angle.abs(), if self.twin_angle < 0.0 { PI } else { 0.0 })
    }
}

/// Fixed points on the three real twin circles, with labels and stability.
pub fn find_fixed_points(params: &ModelParams) -> Result<Vec<FixedPointRecord>> {
    let profile = TwinProfile::new(params);
    let c = profile.couplings;
    let mut out = Vec::new();
    for (s, label) in profile.labelled_angles() {
        let base = ClassicalPoint::from_orbital(twin_orbital(s))?;
        let sectors: Vec<Option<TwinSector>> = if label == FixedPointLabel::OnePlus {
            vec![None]
        } else {
            TwinSector::ALL.iter().map(|&t| Some(t)).collect()
        };
        for sector in sectors {
            let location = match sector {
                Some(t) => base.permuted(t.permutation()),
                None => base,
            };
            let u = location.orbital();
            let residual = stationarity_residual(&c, &u);
            if residual > 1e-10 {
                return Err(Error::Consistency(format!(
                    "fixed point {label} at twin angle {s} did not polish (residual {residual:e})"
                )));
            }
            let lin = linearize_with(&c, &u);
            out.push(FixedPointRecord {
                label,
                sector,
                location,
                twin_angle: s,
                energy_per_particle: c.energy(&u),
                stability: lin.stability,
                eigenvalues: lin.eigenvalues,
                residual,
            });
        }
    }
    Ok(out)
}

/// Energies per particle of the labelled branches at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchEnergies {
    pub one_plus: f64,
    pub two_plus: Option<f64>,
    pub three_plus: Option<f64>,
    pub four_plus: Option<f64>,
}

pub fn branch_energies(params: &ModelParams) -> BranchEnergies {
    branch_energies_of(&TwinProfile::new(params))
}

fn branch_energies_of(profile: &TwinProfile) -> BranchEnergies {
    let mut out = BranchEnergies {
        one_plus: profile.energy(SYMMETRIC_ANGLE),
        two_plus: None,
        three_plus: None,
        four_plus: None,
    };
    for (s, label) in profile.labelled_angles() {
        let e = Some(profile.energy(s));
        match label {
            FixedPointLabel::TwoPlus => out.two_plus = e,
            FixedPointLabel::ThreePlus => out.three_plus = e,
            FixedPointLabel::FourPlus => out.four_plus = e,
            _ => {}
        }
    }
    out
}

fn pair_count(mu: f64, chi: f64) -> usize {
    TwinProfile::reduced(-1.0, chi, mu).positive_branch().len()
}

/// Saddle-node parameter `chi_+(mu)` at which `3+`/`4+` appear, located by
/// bisection on the existence of non-symmetric critical points on the
/// `phi = 0` half of the twin circle. Fixed points depend only on `chi`, `mu`.
pub fn bifurcation_scan(mu: f64, chi_range: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = chi_range;
    if !(hi > lo) {
        return Err(Error::InvalidArgument(format!("empty chi range {chi_range:?}")));
    }
    let (below, above) = (pair_count(mu, lo), pair_count(mu, hi));
    if below != 0 || above == 0 {
        return Err(Error::Bracketing(format!(
            "chi range {chi_range:?} does not bracket the saddle-node at mu = {mu} \
             ({below} and {above} non-symmetric phi = 0 roots at the ends)"
        )));
    }
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if pair_count(mu, mid) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest `chi` searched by [`level_crossing`].
const CROSSING_SEARCH_MAX: f64 = 30.0;

/// Reduced parameter at which the `4+` branch becomes deeper than `1+`.
pub fn level_crossing(mu: f64) -> Result<f64> {
    let chi_plus = bifurcation_scan(mu, (0.0, CROSSING_SEARCH_MAX))?;
    let gap = |chi: f64| -> Option<f64> {
        let b = branch_energies_of(&TwinProfile::reduced(-1.0, chi, mu));
        b.four_plus.map(|e| e - b.one_plus)
    };
    let start = chi_plus + 1e-4;
    let step = 0.05;
    let count = ((CROSSING_SEARCH_MAX - start) / step) as usize;
    let grid: Vec<(f64, Option<f64>)> = (0..=count)
        .into_par_iter()
        .map(|i| {
            let chi = start + i as f64 * step;
            (chi, gap(chi))
        })
        .collect();
    if grid.iter().all(|(_, g)| g.is_none()) {
        return Err(Error::Bracketing(format!("no 4+ branch above chi_+ = {chi_plus} at mu = {mu}")));
    }
    match grid[0].1 {
        Some(g) if g > 0.0 => {}
        _ => {
            return Err(Error::Bracketing(format!(
                "4+ is not above 1+ just after the saddle-node at mu = {mu}"
            )))
        }
    }
    let k = grid
        .windows(2)
        .position(|w| matches!((w[0].1, w[1].1), (Some(a), Some(b)) if a > 0.0 && b <= 0.0))
        .ok_or_else(|| {
            Error::Bracketing(format!(
                "1+ and 4+ do not cross for chi in [{start}, {CROSSING_SEARCH_MAX}] at mu = {mu}"
            ))
        })?;
    let (mut lo, mut hi) = (grid[k].0, grid[k + 1].0);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        match gap(mid) {
            Some(g) if g > 0.0 => lo = mid,
            Some(_) => hi = mid,
            None => {
                return Err(Error::Bracketing(format!("4+ branch lost at chi = {mid}")));
            }
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_angle_constant() {
        assert!((SYMMETRIC_ANGLE - 2.0 * SQRT_2.atan()).abs() < 1e-15);
        let u = twin_orbital(SYMMETRIC_ANGLE);
        for z in u {
            assert!((z.re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn profile_matches_energy_and_derivatives() {
        let p = TwinProfile::reduced(-1.0, 2.7, 0.3);
        let h = 1e-5;
        for &s in &[-2.5, -0.3, 0.4, 1.2, 2.9] {
            let [e, d1, d2] = p.derivatives(s);
            assert!((e - p.couplings.energy(&twin_orbital(s))).abs() < 1e-14);
            let fd1 = (p.energy(s + h) - p.energy(s - h)) / (2.0 * h);
            let fd2 = (p.energy(s + h) - 2.0 * e + p.energy(s - h)) / (h * h);
            assert!((d1 - fd1).abs() < 1e-8);
            assert!((d2 - fd2).abs() < 1e-4);
            let [q, dq, _] = TwinProfile::quartic(s);
            let q_fd = (TwinProfile::quartic(s + h)[0] - TwinProfile::quartic(s - h)[0]) / (2.0 * h);
            assert!((dq - q_fd).abs() < 1e-8);
            assert!(q > 0.0);
        }
    }

    #[test]
    fn weak_coupling_has_two_fixed_points_per_circle() {
        let p = TwinProfile::reduced(-1.0, 1.5, 0.0);
        let labels: Vec<_> = p.labelled_angles().into_iter().map(|(_, l)| l).collect();
        assert_eq!(labels, vec![FixedPointLabel::OnePlus, FixedPointLabel::TwoPlus]);
    }

    #[test]
    fn strong_coupling_pair() {
        let params = ModelParams::from_reduced(-1.0, 3.0, 0.0, 30).unwrap();
        let records = find_fixed_points(&params).unwrap();
        let get = |l| records.iter().filter(move |r: &&FixedPointRecord| r.label == l);
        assert_eq!(get(FixedPointLabel::OnePlus).count(), 1);
        assert_eq!(get(FixedPointLabel::FourPlus).count(), 3);
        assert_eq!(get(FixedPointLabel::ThreePlus).count(), 3);
        assert!(get(FixedPointLabel::FourPlus).all(|r| r.stability == Stability::StableCenter));
        assert!(get(FixedPointLabel::ThreePlus).all(|r| r.stability == Stability::Unstable));
        for r in &records {
            assert!(r.residual < 1e-10);
        }
        let four = get(FixedPointLabel::FourPlus).next().unwrap();
        let w = four.location.coherent_point().unwrap();
        assert!((w.w1.re - 0.214).abs() < 1e-3, "{w:?}");
    }

    #[test]
    fn sectors_are_permutations() {
        let params = ModelParams::from_reduced(-1.0, 2.5, 0.1, 12).unwrap();
        let records = find_fixed_points(&params).unwrap();
        for r in records.iter().filter(|r| r.label == FixedPointLabel::FourPlus) {
            let w = r.location.coherent_point();
            match r.sector.unwrap() {
                TwinSector::Wells12 => {
                    let w = w.unwrap();
                    assert_eq!(w.w1, w.w2);
                }
                TwinSector::Wells13 => assert!((w.unwrap().w1.re - 1.0).abs() < 1e-14),
                TwinSector::Wells23 => assert!((w.unwrap().w2.re - 1.0).abs() < 1e-14),
            }
        }
    }

    #[test]
    fn saddle_node_location_and_normal_form() {
        let chi_plus = bifurcation_scan(0.0, (1.0, 3.0)).unwrap();
        assert!((chi_plus - 1.97).abs() < 0.01, "{chi_plus}");
        let split = |d: f64| {
            let v = TwinProfile::reduced(-1.0, chi_plus + d, 0.0).positive_branch();
            assert_eq!(v.len(), 2);
            let w = |s: f64| (s / 2.0).tan() / SQRT_2;
            (w(v[0]) - w(v[1])).abs()
        };
        let ratio = split(4e-4) / split(1e-4);
        assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn bifurcation_needs_bracket() {
        assert!(matches!(bifurcation_scan(0.0, (0.5, 1.5)), Err(Error::Bracketing(_))));
        assert!(matches!(bifurcation_scan(0.0, (2.5, 3.0)), Err(Error::Bracketing(_))));
    }

    #[test]
    fn crossing_at_two() {
        let chi_c = level_crossing(0.0).unwrap();
        assert!((chi_c - 2.0).abs() < 1e-6, "{chi_c}");
        let below = branch_energies(&ModelParams::from_reduced(-1.0, 1.99, 0.0, 40).unwrap());
        let above = branch_energies(&ModelParams::from_reduced(-1.0, 2.01, 0.0, 40).unwrap());
        assert!(below.four_plus.unwrap() > below.one_plus);
        assert!(above.four_plus.unwrap() < above.one_plus);
    }

    #[test]
    fn energies_per_particle_independent_of_n() {
        let at = |n| {
            let p = ModelParams::from_reduced(-1.0, 2.6, 0.05, n).unwrap();
            find_fixed_points(&p).unwrap()
        };
        let reference = at(10);
        for n in [30, 100] {
            let other = at(n);
            assert_eq!(other.len(), reference.len());
            for (a, b) in reference.iter().zip(&other) {
                assert_eq!(a.label, b.label);
                assert!((a.energy_per_particle - b.energy_per_particle).abs() < 1e-12);
            }
        }
    }
}
