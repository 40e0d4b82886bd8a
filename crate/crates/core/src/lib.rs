//! Boundary conditions for the Krein–von Neumann and Friedrichs extensions of
//! regular even-order quasi-differential operators with matrix coefficients.
//!
//! The pipeline is
//!
//! 1. describe the operator as a [`ShinZettlSystem`] (or use a preset),
//! 2. integrate its companion system to a [`FundamentalMatrix`] at `lambda = 0`,
//! 3. extract the kernel basis fixed by its Dirichlet-type boundary data,
//! 4. assemble the boundary pair `A_K Y(a) = B_K Y(b)` and the transfer
//!    matrix `T_K = B_K^{-1} A_K`.
//!
//! The [`closedform`] module reproduces the pure `2N`-order case exactly in
//! rational arithmetic and serves as an oracle for the numeric path.

pub mod bracket;
pub mod closedform;
pub mod expr;
pub mod extension;
pub mod linalg;
pub mod matfn;
pub mod odeint;
pub mod spectral;
pub mod system;

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Dense complex matrix used for every numeric quantity in the crate.
pub type CMat = DMatrix<Complex64>;

pub use bracket::{check_bracket_constancy, lagrange_bracket, BracketError, SolutionTraces};
pub use expr::{Expr, ParseError};
pub use extension::{
    build_krein_pair, friedrichs_pair, gamma_map, invert_b, kernel_basis, lambda_matrix, membership,
    relative_primeness, transfer_matrix, verify_self_adjoint, BoundaryPair, ExtensionError, KernelBasis, Membership,
    Primeness, Role, SelfAdjointnessReport,
};
pub use matfn::MatrixFn;
pub use odeint::{fundamental_matrix, FundamentalMatrix, IntegrationError, Tolerances};
pub use spectral::{
    friedrichs_char_value, friedrichs_eigenvalues, lowest_friedrichs_eigenvalue, ScanOptions, ScanSample, SpectralError,
    SpectralScanResult,
};
pub use system::{
    build_j, companion_matrix, preset_by_name, preset_catalog, preset_four_coeff, preset_fourth_order, preset_pure,
    validate_hypothesis, Interval, ShinZettlSystem, SystemError, TraceVector, ValidationReport,
};
