//! System data of `ẋ = A(t)x + B(t)u(t)` and its state transition matrix.

mod provider;
mod system;
mod transition;

pub use provider::{Callback, MatrixProvider, Segment};
pub use system::{academic, builtin, dcdc, SystemSpec};
pub use transition::{AccuracyClass, TransitionMode, TransitionOracle};

pub(crate) use transition::rk4_over_panels;
