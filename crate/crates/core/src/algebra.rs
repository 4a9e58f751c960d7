//! su(3) generators and the model Hamiltonian.
//!
//! The Hamiltonian is assembled in two independent ways: directly from the
//! mode bilinears, and as a polynomial in the eight su(3) generators. The two
//! forms differ by a multiple of the identity, `kappa * (N^2/3 - N)`, which
//! comes from rewriting `sum_i n_i (n_i - 1)` through the Cartan generators.
//!
//! The off-diagonal generators use the Hermitian pairing `P_k = a†_k a_j + a†_j a_k`,
//! `J_k = i (a†_k a_j - a†_j a_k)` with `j = ((k + 1) mod 3) + 1`, i.e. the
//! mode pairs (1,3), (2,1), (3,2).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{FockBasis, Mode};
use crate::sparse::{SparseHermitianOperator, SparseMatrix};

/// Couplings of the three-mode model.
///
/// `omega` is the tunneling rate, `kappa` the self-collision and `lambda` the
/// cross-collision strength. The reduced parameters are
/// `chi = kappa (N - 1) / omega` and `mu = lambda (N - 1) / omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub omega: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub n_particles: usize,
}

impl ModelParams {
    pub fn new(omega: f64, kappa: f64, lambda: f64, n_particles: usize) -> Self {
        ModelParams {
            omega,
            kappa,
            lambda,
            n_particles,
        }
    }

    /// Raw couplings from reduced parameters.
    ///
    /// For `N = 1` the interaction terms vanish identically, so only
    /// `chi = mu = 0` is accepted there.
    pub fn from_reduced(omega: f64, chi: f64, mu: f64, n_particles: usize) -> Result<Self> {
        if omega == 0.0 {
            return Err(Error::InvalidArgument(
                "reduced parameters need a nonzero tunneling rate".into(),
            ));
        }
        if n_particles < 2 {
            if chi == 0.0 && mu == 0.0 {
                return Ok(Self::new(omega, 0.0, 0.0, n_particles));
            }
            return Err(Error::InvalidArgument(format!(
                "reduced parameters chi, mu are undefined for N = {n_particles} (need N >= 2)"
            )));
        }
        let m = (n_particles - 1) as f64;
        Ok(Self::new(omega, chi * omega / m, mu * omega / m, n_particles))
    }

    pub fn n(&self) -> f64 {
        self.n_particles as f64
    }

    /// Effective tunneling `Omega' = Omega + 2 Lambda (N - 1)`.
    pub fn omega_eff(&self) -> f64 {
        self.omega + 2.0 * self.lambda * (self.n() - 1.0)
    }

    fn reduced(&self, coupling: f64) -> Result<f64> {
        if self.n_particles < 2 || self.omega == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "reduced parameters need N >= 2 and omega != 0 (N = {}, omega = {})",
                self.n_particles, self.omega
            )));
        }
        Ok(coupling * (self.n() - 1.0) / self.omega)
    }

    pub fn chi(&self) -> Result<f64> {
        self.reduced(self.kappa)
    }

    pub fn mu(&self) -> Result<f64> {
        self.reduced(self.lambda)
    }

    /// Same model with a different particle number, keeping `chi`, `mu` fixed.
    pub fn with_particles_reduced(&self, n_particles: usize) -> Result<Self> {
        Self::from_reduced(self.omega, self.chi()?, self.mu()?, n_particles)
    }
}

/// The eight su(3) generators on an `N`-particle basis.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    pub q1: SparseHermitianOperator,
    pub q2: SparseHermitianOperator,
    pub p: [SparseHermitianOperator; 3],
    pub j: [SparseHermitianOperator; 3],
}

/// Partner mode `j(k) = ((k + 1) mod 3) + 1` of the pairing used by `P_k`, `J_k`.
pub fn partner(k: Mode) -> Mode {
    match k {
        Mode::One => Mode::Three,
        Mode::Two => Mode::One,
        Mode::Three => Mode::Two,
    }
}

fn hermitian(m: &SparseMatrix) -> SparseHermitianOperator {
    SparseHermitianOperator::from_matrix(m, 1e-12)
        .expect("generator combinations are Hermitian by construction")
}

struct Bilinears<'a> {
    basis: &'a FockBasis,
}

impl Bilinears<'_> {
    fn e(&self, i: Mode, j: Mode) -> SparseMatrix {
        self.basis.hop_operator(i, j)
    }

    fn q1(&self) -> SparseMatrix {
        self.e(Mode::One, Mode::One)
            .sub(&self.e(Mode::Two, Mode::Two))
            .scale_real(0.5)
    }

    fn q2(&self) -> SparseMatrix {
        self.e(Mode::One, Mode::One)
            .add(&self.e(Mode::Two, Mode::Two))
            .sub(&self.e(Mode::Three, Mode::Three).scale_real(2.0))
            .scale_real(1.0 / 3.0)
    }

    fn p(&self, k: Mode) -> SparseMatrix {
        let j = partner(k);
        self.e(k, j).add(&self.e(j, k))
    }

    fn j(&self, k: Mode) -> SparseMatrix {
        let j = partner(k);
        self.e(k, j)
            .sub(&self.e(j, k))
            .scale(Complex64::new(0.0, 1.0))
    }
}

impl GeneratorSet {
    pub fn new(basis: &FockBasis) -> Self {
        let b = Bilinears { basis };
        GeneratorSet {
            q1: hermitian(&b.q1()),
            q2: hermitian(&b.q2()),
            p: Mode::ALL.map(|k| hermitian(&b.p(k))),
            j: Mode::ALL.map(|k| hermitian(&b.j(k))),
        }
    }

    /// Generators in the fixed order `Q1, Q2, P1, P2, P3, J1, J2, J3`.
    pub fn all(&self) -> [&SparseHermitianOperator; 8] {
        [
            &self.q1, &self.q2, &self.p[0], &self.p[1], &self.p[2], &self.j[0], &self.j[1],
            &self.j[2],
        ]
    }
}

/// Hamiltonian written with mode bilinears:
/// `Omega' sum_{i!=j} a†_i a_j + kappa sum_i a†_i² a_i² - 2 Lambda sum_{i!=j!=k} a†_i a_i a†_j a_k`.
pub fn hamiltonian_direct(basis: &FockBasis, params: &ModelParams) -> SparseHermitianOperator {
    HamiltonianTerms::new(basis).assemble(params)
}

fn direct_matrix(basis: &FockBasis, params: &ModelParams) -> SparseMatrix {
    HamiltonianTerms::new(basis).combine(params)
}

/// The three coupling-independent pieces of the direct Hamiltonian, built once
/// per basis so that parameter scans only recombine them.
#[derive(Debug, Clone)]
pub struct HamiltonianTerms {
    n_particles: usize,
    /// `sum_{i!=j} a†_i a_j`
    pub tunneling: SparseMatrix,
    /// `sum_i a†_i² a_i²`
    pub self_collision: SparseMatrix,
    /// `sum_{i!=j!=k} a†_i a_i a†_j a_k`
    pub cross_collision: SparseMatrix,
}

impl HamiltonianTerms {
    pub fn new(basis: &FockBasis) -> Self {
        let b = Bilinears { basis };
        let dim = basis.dimension();
        let mut tunneling = SparseMatrix::zeros(dim);
        let mut self_collision = SparseMatrix::zeros(dim);
        let mut cross_collision = SparseMatrix::zeros(dim);
        for i in Mode::ALL {
            let n_i = b.e(i, i);
            // a†² a² = n (n - 1)
            self_collision = self_collision.add(&n_i.mul(&n_i).sub(&n_i));
            for j in Mode::ALL {
                if j == i {
                    continue;
                }
                tunneling = tunneling.add(&b.e(i, j));
                for k in Mode::ALL {
                    if k != i && k != j {
                        cross_collision = cross_collision.add(&n_i.mul(&b.e(j, k)));
                    }
                }
            }
        }
        HamiltonianTerms {
            n_particles: basis.total_particles(),
            tunneling,
            self_collision,
            cross_collision,
        }
    }

    fn combine(&self, params: &ModelParams) -> SparseMatrix {
        assert_eq!(params.n_particles, self.n_particles, "particle number mismatch");
        self.tunneling
            .scale_real(params.omega_eff())
            .add(&self.self_collision.scale_real(params.kappa))
            .add(&self.cross_collision.scale_real(-2.0 * params.lambda))
    }

    pub fn assemble(&self, params: &ModelParams) -> SparseHermitianOperator {
        hermitian(&self.combine(params))
    }
}

/// Hamiltonian written as a polynomial in the su(3) generators:
/// `(Omega' - 2 Lambda N/3)(P1+P2+P3) + (kappa/2)(4 Q1² + 3 Q2²)
///  + Lambda [2 Q1 (P1 - P3) + Q2 (2 P2 - P1 - P3)]`.
pub fn hamiltonian_generators(basis: &FockBasis, params: &ModelParams) -> SparseHermitianOperator {
    hermitian(&generator_matrix(basis, params))
}

fn generator_matrix(basis: &FockBasis, params: &ModelParams) -> SparseMatrix {
    let b = Bilinears { basis };
    let n = basis.total_particles() as f64;
    let (q1, q2) = (b.q1(), b.q2());
    let [p1, p2, p3] = Mode::ALL.map(|k| b.p(k));

    let linear = p1
        .add(&p2)
        .add(&p3)
        .scale_real(params.omega_eff() - 2.0 * params.lambda * n / 3.0);
    let quadratic = q1
        .mul(&q1)
        .scale_real(4.0)
        .add(&q2.mul(&q2).scale_real(3.0))
        .scale_real(params.kappa / 2.0);
    let mixed = q1
        .mul(&p1.sub(&p3))
        .scale_real(2.0)
        .add(&q2.mul(&p2.scale_real(2.0).sub(&p1).sub(&p3)))
        .scale_real(params.lambda);
    linear.add(&quadratic).add(&mixed)
}

/// Returns `c` with `H_direct - H_generators = c · 1`.
///
/// Fails with [`Error::ModelInconsistency`] when the difference is not a
/// multiple of the identity to within `1e-10` relative to the matrix norm.
pub fn verify_equivalence(basis: &FockBasis, params: &ModelParams) -> Result<f64> {
    identity_shift(&direct_matrix(basis, params), &generator_matrix(basis, params))
}

fn identity_shift(a: &SparseMatrix, b: &SparseMatrix) -> Result<f64> {
    let diff = a.sub(b);
    let dim = a.dim();
    let shift = diff.trace().re / dim as f64;
    let residual = diff.sub(&SparseMatrix::identity(dim).scale_real(shift));
    let worst = residual
        .triplets()
        .map(|(_, _, v)| v.norm())
        .fold(0.0, f64::max);
    let scale = a.norm_bound().max(b.norm_bound()).max(1.0);
    if worst > 1e-10 * scale {
        return Err(Error::ModelInconsistency(format!(
            "generator form differs from direct form by a non-scalar matrix (max residual {worst:e})"
        )));
    }
    Ok(shift)
}
