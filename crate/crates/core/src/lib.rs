//! Exact and semiclassical treatment of `N` bosons in a symmetric triple well.
//!
//! The model is the three-mode Bose-Hubbard Hamiltonian with tunneling `Omega`,
//! on-site collisions `kappa` and cross collisions `Lambda`. The crate provides
//!
//! * the Fock basis and sparse bilinear operators ([`fock`], [`sparse`]),
//! * the su(3) generators and both forms of the Hamiltonian ([`algebra`]),
//! * SU(3) coherent states ([`coherent`]),
//! * ground states and low-lying spectra ([`spectral`]),
//! * the su(3) generalized purity and its finite-size scaling ([`purity`]),
//! * the classical limit: energy surface, flow, fixed points, bifurcation and
//!   level crossing ([`semiclassical`]),
//! * Husimi and phase distributions ([`distributions`]).

pub mod algebra;
pub mod coherent;
pub mod distributions;
pub mod error;
pub mod fock;
pub mod purity;
pub mod semiclassical;
pub mod sparse;
pub mod spectral;

pub use algebra::{GeneratorSet, ModelParams};
pub use coherent::{CoherentPoint, QuantumState};
pub use error::{Error, Result};
pub use fock::{FockBasis, Mode};
pub use sparse::{SparseHermitianOperator, SparseMatrix};
