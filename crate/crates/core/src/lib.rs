//! Inner approximations of reachable sets and tubes of linear time-varying
//! systems with zonotopic initial and input uncertainty.
//!
//! The reachable set at each grid time is under-approximated by the set reached
//! with inputs held constant on every grid cell:
//!
//! ```text
//! Λ₀ = X₀,    Λᵢ = φ(tᵢ, tᵢ₋₁) Λᵢ₋₁ + (∫_{tᵢ₋₁}^{tᵢ} φ(tᵢ, s) B(s) ds) U
//! ```
//!
//! Every `Λᵢ` is a subset of the true reachable set at `tᵢ`, and the sets (and
//! their union, for the tube) converge in Hausdorff distance as the grid is
//! refined. The [`validate`] module checks both claims numerically.

// NaN must fail every range check, so negated comparisons are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod io;
pub mod linalg;
pub mod quadrature;
pub mod reachcore;
pub mod setkernel;
pub mod validate;

pub use dynamics::{AccuracyClass, MatrixProvider, SystemSpec, TransitionMode, TransitionOracle};
pub use error::{Error, Result};
pub use linalg::{matrix_exponential, Matrix, Vector};
pub use reachcore::{reach_sets, step_input_map, tube, ReachResult, StepInputMap, TimeGrid};
pub use setkernel::Zonotope;
pub use validate::{
    certify_under_approximation, convergence_study, extract_witness, hausdorff_convex,
    hausdorff_tube, CertificationReport, ConvergenceMode, ConvergenceReport, Witness,
};
