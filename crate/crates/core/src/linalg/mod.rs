//! Self-contained dense and structured linear algebra.
//!
//! Everything here is hand-rolled so the kernels stay auditable: Sturm
//! counting and implicit-shift QL for symmetric tridiagonal matrices,
//! Householder reduction for dense symmetric/Hermitian matrices, inverse
//! iteration with cluster reorthogonalization for eigenvectors, LDLᵀ inertia
//! counting for Hermitian band matrices, and a plain discrete Fourier
//! transform. Sizes stay in the low thousands, where direct methods win.

mod banded;
mod dense;
mod dft;
mod tridiag;

pub use banded::HermBanded;
pub use dense::{eigh_hermitian, HermDense};
pub use dft::{dft, idft};
pub use tridiag::{eigh_tridiagonal, sturm_count, Tridiag};

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("QL iteration failed to converge for eigenvalue index {index} after {sweeps} sweeps")]
    NoConvergence { index: usize, sweeps: usize },
    #[error("matrix is not Hermitian: max |A - A*| entry = {defect:.3e}")]
    NotHermitian { defect: f64 },
}

/// Eigendecomposition result. `values` are nondecreasing; when requested,
/// `vectors[k]` is the orthonormal eigenvector paired with `values[k]` and
/// `residual` is the max of ‖A w − λ w‖₂ over the computed pairs.
#[derive(Debug, Clone)]
pub struct EigResult {
    pub values: Vec<f64>,
    pub vectors: Option<Vec<Vec<Complex64>>>,
    pub residual: f64,
}

impl EigResult {
    /// Number of eigenvalues strictly below `e`.
    pub fn count_below(&self, e: f64) -> usize {
        self.values.partition_point(|&v| v < e)
    }
}

/// Max |⟨w_i, w_j⟩| over distinct pairs of the given vectors.
pub fn max_pairwise_overlap(vectors: &[Vec<Complex64>]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..vectors.len() {
        for j in (i + 1)..vectors.len() {
            let dot: Complex64 = vectors[i]
                .iter()
                .zip(&vectors[j])
                .map(|(a, b)| a.conj() * b)
                .sum();
            worst = worst.max(dot.norm());
        }
    }
    worst
}
