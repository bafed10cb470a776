//! Numerical evidence for the two guarantees of the recursion: each computed
//! set is reachable (witness simulation) and the sets converge as the grid is
//! refined (Hausdorff self-convergence).

mod convergence;
mod hausdorff;
mod witness;

pub use convergence::{
    convergence_study, ConvergenceMode, ConvergenceReport, FINAL_SET_DIRECTIONS, TUBE_SAMPLES_PER_SET,
};
pub use hausdorff::{hausdorff_convex, hausdorff_tube, outline_cloud, point_cloud_hausdorff};
pub use witness::{
    certify_under_approximation, checked_indices, extract_witness, push_through_recursion, simulate,
    CertificationReport, FailedWitness, Witness, MAX_EXTREME_VERTICES, SIMULATION_SUBSTEPS,
};

/// Default witness tolerance for systems with bounded data.
pub const WITNESS_TOL_SMOOTH: f64 = 1e-6;
/// Default witness tolerance when `A` or `B` is singular at a point of the interval.
pub const WITNESS_TOL_SINGULAR: f64 = 1e-5;

/// Witness tolerance matching the regularity of the system data.
pub fn default_witness_tolerance(sys: &crate::dynamics::SystemSpec) -> f64 {
    if sys.singular_points().is_empty() {
        WITNESS_TOL_SMOOTH
    } else {
        WITNESS_TOL_SINGULAR
    }
}
