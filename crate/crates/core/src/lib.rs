//! Numerical machinery for quasiperiodic Schrödinger operators and their
//! long-range duals.
//!
//! The crate covers the full chain from model assembly to duality
//! verification at finite truncation scale:
//!
//! * [`model`] — trigonometric-polynomial potentials, incommensurate
//!   frequencies with continued-fraction diagnostics, and finite windows of
//!   the direct operator `H(x)` and the dual operator `H̃(θ)`.
//! * [`linalg`] — self-contained dense/structured symmetric eigensolvers:
//!   Sturm-sequence counting, implicit-shift QL, inverse iteration, and
//!   discrete Fourier transforms.
//! * [`cocycle`] — transfer-matrix cocycles over toral rotations, Lyapunov
//!   exponents and fibered rotation numbers by orbit averaging.
//! * [`spectral`] — integrated density of states, gap detection and labeling,
//!   and the inverse rotation-number function `E(θ)`.
//! * [`duality`] — the duality unitary on finite Fourier data, Bloch
//!   solutions, conjugation to constant rotations, and completeness reports
//!   for the dual eigenbasis.

pub mod cocycle;
pub mod duality;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod spectral;
