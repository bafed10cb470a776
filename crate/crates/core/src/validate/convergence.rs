//! Self-convergence studies: distances of coarse-grid results to a fine-grid
//! reference computed by the same recursion.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hausdorff::{hausdorff_convex, hausdorff_tube};
use crate::dynamics::TransitionOracle;
use crate::error::{Error, Result};
use crate::reachcore::{reach_sets, ReachResult};

/// Direction count for final-set distances.
pub const FINAL_SET_DIRECTIONS: usize = 720;
/// Outline samples per set for tube distances.
pub const TUBE_SAMPLES_PER_SET: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceMode {
    /// `Λ_N` versus the reference final set.
    FinalSet,
    /// `⋃ᵢ Λᵢ` versus the reference union.
    Tube,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub mode: ConvergenceMode,
    pub steps: Vec<usize>,
    pub reference_steps: usize,
    pub distances: Vec<f64>,
    /// `d(Nₖ)/d(Nₖ₊₁)` for consecutive entries of `steps`.
    pub ratios: Vec<f64>,
    /// Direction count (final set) or outline samples per set (tube).
    pub resolution: usize,
}

impl ConvergenceReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.distances.windows(2).all(|w| w[1] < w[0])
    }

    pub fn distance_at(&self, n: usize) -> Option<f64> {
        self.steps.iter().position(|&s| s == n).map(|k| self.distances[k])
    }
}

/// Runs the recursion for every `N` in `steps` and for `reference_steps`, and
/// reports the distance of each result to the reference.
///
/// Requires `steps` strictly increasing, `reference_steps ≥ 4·max(steps)` and
/// every `N` dividing `reference_steps` so the grids are nested.
pub fn convergence_study(
    orc: &TransitionOracle<'_>,
    steps: &[usize],
    reference_steps: usize,
    mode: ConvergenceMode,
) -> Result<ConvergenceReport> {
    let invalid = |m: String| Err(Error::InvalidInput(m));
    if steps.is_empty() {
        return invalid("empty list of step counts".into());
    }
    if steps[0] == 0 || steps.windows(2).any(|w| w[1] <= w[0]) {
        return invalid(format!("step counts must be positive and strictly increasing: {steps:?}"));
    }
    let max_n = *steps.last().expect("non-empty");
    if reference_steps < 4 * max_n {
        return invalid(format!(
            "reference step count {reference_steps} must be at least 4 x {max_n}"
        ));
    }
    if let Some(n) = steps.iter().find(|&&n| !reference_steps.is_multiple_of(n)) {
        return invalid(format!("step count {n} does not divide the reference {reference_steps}"));
    }
    if mode == ConvergenceMode::Tube && orc.system().state_dim() != 2 {
        return invalid("tube distances are only estimated for planar systems".into());
    }

    let reference = reach_sets(orc, reference_steps)?;
    let runs: Vec<ReachResult> = steps
        .par_iter()
        .map(|&n| reach_sets(orc, n))
        .collect::<Result<_>>()?;

    let (resolution, distances) = match mode {
        ConvergenceMode::FinalSet => (
            FINAL_SET_DIRECTIONS,
            runs.iter()
                .map(|r| hausdorff_convex(r.final_set(), reference.final_set(), FINAL_SET_DIRECTIONS))
                .collect::<Result<Vec<_>>>()?,
        ),
        ConvergenceMode::Tube => (
            TUBE_SAMPLES_PER_SET,
            runs.iter()
                .map(|r| hausdorff_tube(r.lambdas(), reference.lambdas(), TUBE_SAMPLES_PER_SET))
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    let ratios = distances.windows(2).map(|w| w[0] / w[1]).collect();

    Ok(ConvergenceReport {
        mode,
        steps: steps.to_vec(),
        reference_steps,
        distances,
        ratios,
        resolution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{academic, MatrixProvider, SystemSpec};
    use crate::linalg::{Matrix, Vector};
    use crate::setkernel::Zonotope;

    #[test]
    fn drift_free_distances_vanish() {
        let s = SystemSpec::new(
            "drift-free",
            0.0,
            1.0,
            MatrixProvider::Constant(Matrix::zeros(2, 2)),
            MatrixProvider::Constant(Matrix::identity(2, 2)),
            Zonotope::singleton(Vector::zeros(2)).unwrap(),
            Zonotope::unit_box(2),
        )
        .unwrap();
        let orc = TransitionOracle::preferred(&s);
        let rep = convergence_study(&orc, &[1, 2, 4], 16, ConvergenceMode::FinalSet).unwrap();
        assert!(rep.distances.iter().all(|&d| d <= 1e-10), "{rep:?}");
    }

    #[test]
    fn academic_improves_with_n() {
        let a = academic();
        let orc = TransitionOracle::preferred(&a);
        let rep = convergence_study(&orc, &[1, 2, 5], 200, ConvergenceMode::FinalSet).unwrap();
        assert!(rep.strictly_decreasing(), "{rep:?}");
        assert_eq!(rep.ratios.len(), 2);
    }

    #[test]
    fn invalid_step_lists() {
        let a = academic();
        let orc = TransitionOracle::preferred(&a);
        for (ns, r) in [(vec![], 10), (vec![2, 1], 40), (vec![0, 1], 40), (vec![1, 5], 19), (vec![3], 20)] {
            assert!(convergence_study(&orc, &ns, r, ConvergenceMode::FinalSet).is_err(), "{ns:?} {r}");
        }
    }
}
