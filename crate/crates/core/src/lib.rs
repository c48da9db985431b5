//! Energy-independent effective Hamiltonians for two-channel spectral
//! problems.
//!
//! A two-channel Hamiltonian `H = [[A₁, B₁₂], [B₂₁, A₂]]` is reduced to the
//! channel operators `H_α = A_α + B_{αβ} Q_{βα}`, where `Q₂₁` solves the
//! stationary Riccati equation `Q A₁ − A₂ Q + Q B₁₂ Q = B₂₁` by a contraction
//! fixed-point iteration. Verification modules check the structural
//! consequences: block diagonalization, spectral partition, biorthogonal
//! eigensystems, weighted self-adjointness and on-shell scattering.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod effective;
pub mod harness;
pub mod kernels;
pub mod linalg;
pub mod model;
pub mod random;
pub mod riccati;
pub mod scattering;
pub mod spectral;

pub use model::{Band, Channel, CouplingBlock, SpectralOperator, TwoChannelProblem};
pub use riccati::{solve_riccati, RiccatiSolution, SolverOptions};
