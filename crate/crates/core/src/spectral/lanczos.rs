//! Lanczos iteration with full reorthogonalization and explicit restarts.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::SparseHermitianOperator;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy)]
pub(crate) struct LanczosConfig {
    pub max_krylov: usize,
    pub max_restarts: usize,
    /// Absolute residual tolerance on `||H v - e v||`.
    pub tolerance: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct LanczosPair {
    pub value: f64,
    pub vector: Vec<Complex64>,
    pub residual: f64,
    pub iterations: usize,
}

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn orthogonalize(v: &mut [Complex64], against: &[Vec<Complex64>]) {
    // Two passes of classical Gram-Schmidt.
    for _ in 0..2 {
        for u in against {
            let c = dot(u, v);
            v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
        }
    }
}

pub(crate) fn residual(op: &SparseHermitianOperator, value: f64, v: &[Complex64]) -> f64 {
    let hv = op.matvec(v);
    hv.iter()
        .zip(v)
        .map(|(a, b)| (a - b * value).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Lowest eigenpair of `op` restricted to the orthogonal complement of `locked`.
pub(crate) fn lowest(
    op: &SparseHermitianOperator,
    start: &[Complex64],
    locked: &[Vec<Complex64>],
    config: &LanczosConfig,
) -> Result<LanczosPair> {
    let dim = op.dim();
    let krylov = config.max_krylov.min(dim.saturating_sub(locked.len())).max(1);
    let mut current = start.to_vec();
    let mut total_steps = 0;
    let mut last_residual = f64::INFINITY;

    for _ in 0..=config.max_restarts {
        orthogonalize(&mut current, locked);
        let n0 = norm(&current);
        if n0 == 0.0 || !n0.is_finite() {
            return Err(Error::InvalidArgument(
                "Lanczos start vector lies in the locked subspace".into(),
            ));
        }
        current.iter_mut().for_each(|x| *x /= n0);

        let mut basis: Vec<Vec<Complex64>> = vec![current.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut w = vec![ZERO; dim];
        let mut ritz = (0.0, vec![1.0]);

        for j in 0..krylov {
            op.apply(&basis[j], &mut w);
            total_steps += 1;
            let alpha = dot(&basis[j], &w).re;
            alphas.push(alpha);
            orthogonalize(&mut w, &basis);
            orthogonalize(&mut w, locked);
            let beta = norm(&w);

            let check = j + 1 == krylov || beta < 1e-12 * (alpha.abs() + 1.0) || (j + 1) % 8 == 0;
            if check {
                ritz = tridiagonal_lowest(&alphas, &betas);
                let estimate = beta * ritz.1.last().unwrap().abs();
                if estimate < 0.1 * config.tolerance || beta < 1e-12 * (alpha.abs() + 1.0) {
                    break;
                }
            }
            if j + 1 == krylov {
                break;
            }
            betas.push(beta);
            let next: Vec<Complex64> = w.iter().map(|x| x / beta).collect();
            basis.push(next);
        }

        // Ritz vector from the Krylov basis.
        let coeffs = &ritz.1;
        let mut vector = vec![ZERO; dim];
        for (c, b) in coeffs.iter().zip(&basis) {
            vector.iter_mut().zip(b).for_each(|(v, x)| *v += x * *c);
        }
        orthogonalize(&mut vector, locked);
        let nv = norm(&vector);
        vector.iter_mut().for_each(|x| *x /= nv);
        let value = op.expectation(&vector);
        let res = residual(op, value, &vector);
        last_residual = res;
        if res <= config.tolerance {
            return Ok(LanczosPair {
                value,
                vector,
                residual: res,
                iterations: total_steps,
            });
        }
        current = vector;
    }
    Err(Error::NotConverged {
        iterations: total_steps,
        restarts: config.max_restarts,
        residual: last_residual,
        tolerance: config.tolerance,
    })
}

/// Lowest eigenpair of the symmetric tridiagonal matrix with diagonal
/// `alphas` and off-diagonal `betas`.
fn tridiagonal_lowest(alphas: &[f64], betas: &[f64]) -> (f64, Vec<f64>) {
    let m = alphas.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let (k, value) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty tridiagonal");
    (value, eig.eigenvectors.column(k).iter().copied().collect())
}
