//! Fock space of `N` bosons distributed over three modes.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// One of the three local modes, labelled 1, 2, 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    One,
    Two,
    Three,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::One, Mode::Two, Mode::Three];

    /// Mode from its 1-based label.
    pub fn new(label: usize) -> Result<Self> {
        match label {
            1 => Ok(Mode::One),
            2 => Ok(Mode::Two),
            3 => Ok(Mode::Three),
            other => Err(Error::InvalidArgument(format!(
                "mode index must be 1, 2 or 3, got {other}"
            ))),
        }
    }

    /// Zero-based position in occupation triples.
    pub fn index(self) -> usize {
        match self {
            Mode::One => 0,
            Mode::Two => 1,
            Mode::Three => 2,
        }
    }

    pub fn label(self) -> usize {
        self.index() + 1
    }
}

/// Occupation numbers `(n1, n2, n3)`.
pub type Occupation = [usize; 3];

/// The `(N+1)(N+2)/2` occupation triples with `n1 + n2 + n3 = N`.
///
/// States are ordered lexicographically in `(n1, n2)`, with `n3` implied, so
/// index 0 is `(0, 0, N)` and the last index is `(N, 0, 0)`.
#[derive(Debug, Clone)]
pub struct FockBasis {
    total: usize,
    states: Vec<Occupation>,
    index: HashMap<Occupation, usize>,
}

impl FockBasis {
    pub fn new(total: usize) -> Self {
        let states: Vec<Occupation> = (0..=total)
            .flat_map(|n1| (0..=total - n1).map(move |n2| [n1, n2, total - n1 - n2]))
            .collect();
        let index = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        FockBasis {
            total,
            states,
            index,
        }
    }

    pub fn total_particles(&self) -> usize {
        self.total
    }

    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Occupation] {
        &self.states
    }

    pub fn state(&self, index: usize) -> Occupation {
        self.states[index]
    }

    pub fn index_of(&self, occupation: &Occupation) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    /// Matrix of the bilinear `a†_i a_j` in this basis.
    pub fn hop_operator(&self, i: Mode, j: Mode) -> SparseMatrix {
        let (i, j) = (i.index(), j.index());
        let mut triplets = Vec::with_capacity(self.dimension());
        for (col, state) in self.states.iter().enumerate() {
            if i == j {
                if state[i] > 0 {
                    triplets.push((col, col, Complex64::new(state[i] as f64, 0.0)));
                }
                continue;
            }
            if state[j] == 0 {
                continue;
            }
            let amplitude = ((state[j] * (state[i] + 1)) as f64).sqrt();
            let mut target = *state;
            target[j] -= 1;
            target[i] += 1;
            let row = self.index[&target];
            triplets.push((row, col, Complex64::new(amplitude, 0.0)));
        }
        SparseMatrix::from_triplets(self.dimension(), triplets)
    }

    /// Number operator `a†_i a_i`.
    pub fn number_operator(&self, mode: Mode) -> SparseMatrix {
        self.hop_operator(mode, mode)
    }
}
