//! Constructive membership certificates: every point of `Λⱼ` is reached by a
//! concrete initial state and a step input, which is re-simulated here with an
//! integrator that never touches the transition oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{rk4_over_panels, TransitionOracle};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::quadrature::split_panels;
use crate::reachcore::ReachResult;

/// RK4 steps per grid cell used by the witness simulator.
pub const SIMULATION_SUBSTEPS: usize = 64;

/// Largest number of all-±1 coefficient vectors tried per checked set.
pub const MAX_EXTREME_VERTICES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Index `j` of the certified set `Λⱼ`.
    pub index: usize,
    pub target: Vec<f64>,
    pub x0: Vec<f64>,
    /// Input value held on each cell `[tᵢ₋₁, tᵢ)`, `i = 1..=j`.
    pub inputs: Vec<Vec<f64>>,
    pub simulated_endpoint: Vec<f64>,
    pub error: f64,
}

/// Builds and checks the witness for the point of `Λⱼ` with coefficients
/// `xi_x0` (on the generators of `X₀`) and `xi_u[i]` (on the generators of `U`
/// in cell `i + 1`); `j = xi_u.len()`.
pub fn extract_witness(
    orc: &TransitionOracle<'_>,
    result: &ReachResult,
    xi_x0: &[f64],
    xi_u: &[Vec<f64>],
) -> Result<Witness> {
    let sys = orc.system();
    if result.fingerprint() != sys.fingerprint() {
        return Err(Error::InvalidInput(
            "reach result was computed for a different system".into(),
        ));
    }
    let index = xi_u.len();
    if index > result.grid().steps() {
        return Err(Error::InvalidInput(format!(
            "{index} input coefficient arrays for a grid of {} steps",
            result.grid().steps()
        )));
    }
    let x0 = sys.x0().point_from_coefficients(xi_x0)?;
    let inputs: Vec<Vector> = xi_u
        .iter()
        .map(|xi| sys.u().point_from_coefficients(xi))
        .collect::<Result<_>>()?;

    let coefficients: Vec<f64> = xi_x0.iter().chain(xi_u.iter().flatten()).copied().collect();
    let target = result.lambdas()[index].point_from_coefficients(&coefficients)?;
    let endpoint = simulate(orc, result, &x0, &inputs)?;
    let error = (&target - &endpoint).norm();
    if !error.is_finite() {
        return Err(Error::NonFinite("witness simulation"));
    }
    Ok(Witness {
        index,
        target: target.iter().copied().collect(),
        x0: x0.iter().copied().collect(),
        inputs: inputs.iter().map(|u| u.iter().copied().collect()).collect(),
        simulated_endpoint: endpoint.iter().copied().collect(),
        error,
    })
}

/// The recursion applied to one point: `xᵢ = φᵢ xᵢ₋₁ + Lᵢ uᵢ`.
pub fn push_through_recursion(result: &ReachResult, x0: &Vector, inputs: &[Vector]) -> Vector {
    let mut x = x0.clone();
    for (i, u) in inputs.iter().enumerate() {
        let step = result.step(i + 1);
        x = &step.transition * x + &step.input_map * u;
    }
    x
}

/// Integrates `ẋ = A(t)x + B(t)uᵢ` from `t_lo` to `t_j` with RK4,
/// `SIMULATION_SUBSTEPS` steps per cell, panels split at grid points,
/// breakpoints and graded near singular points.
pub fn simulate(
    orc: &TransitionOracle<'_>,
    result: &ReachResult,
    x0: &Vector,
    inputs: &[Vector],
) -> Result<Vector> {
    let sys = orc.system();
    check_dim("simulate", sys.state_dim(), x0.len())?;
    let grid = result.grid();
    let h = grid.tau() / SIMULATION_SUBSTEPS as f64;
    let mut x = Matrix::from_column_slice(x0.len(), 1, x0.as_slice());
    for (i, u) in inputs.iter().enumerate() {
        check_dim("simulate input", sys.input_dim(), u.len())?;
        let u = Matrix::from_column_slice(u.len(), 1, u.as_slice());
        let panels = split_panels(grid.t(i), grid.t(i + 1), sys.breakpoints(), sys.singular_points());
        x = rk4_over_panels(&panels, h, x, |t, panel, x| {
            sys.a().eval_in(t, panel) * x + sys.b().eval_in(t, panel) * &u
        });
    }
    Ok(Vector::from_column_slice(x.as_slice()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedWitness {
    pub index: usize,
    pub coefficients: Vec<f64>,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub passed: bool,
    pub seed: u64,
    pub tolerance: f64,
    pub trials: usize,
    pub checked_indices: Vec<usize>,
    pub witnesses_checked: usize,
    pub max_error: f64,
    /// First few failing witnesses, if any.
    pub failures: Vec<FailedWitness>,
}

/// Set indices checked by [`certify_under_approximation`]: the final set plus
/// up to three intermediate ones at the quartiles.
pub fn checked_indices(steps: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = [1, 2, 3]
        .iter()
        .map(|q| (q * steps).div_ceil(4))
        .filter(|&i| i >= 1 && i < steps)
        .collect();
    idx.push(steps);
    idx.sort_unstable();
    idx.dedup();
    idx
}

/// Draws `trials` uniform coefficient vectors plus up to 64 all-±1 vertices for
/// each checked set and verifies that each witness simulates to its target
/// within `tol`.
pub fn certify_under_approximation(
    orc: &TransitionOracle<'_>,
    result: &ReachResult,
    trials: usize,
    tol: f64,
    seed: u64,
) -> Result<CertificationReport> {
    if trials == 0 {
        return Err(Error::InvalidInput("need at least one trial".into()));
    }
    let sys = orc.system();
    let kx = sys.x0().num_generators();
    let ku = sys.u().num_generators();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let indices = checked_indices(result.grid().steps());
    let mut jobs: Vec<(usize, Vec<f64>)> = Vec::new();
    for &j in &indices {
        let k = kx + j * ku;
        for _ in 0..trials {
            jobs.push((j, (0..k).map(|_| rng.random_range(-1.0..=1.0)).collect()));
        }
        if k > 0 && k < 7 && (1usize << k) <= MAX_EXTREME_VERTICES {
            for mask in 0..(1usize << k) {
                jobs.push((j, (0..k).map(|b| if mask >> b & 1 == 1 { 1.0 } else { -1.0 }).collect()));
            }
        } else if k > 0 {
            for _ in 0..MAX_EXTREME_VERTICES {
                jobs.push((j, (0..k).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect()));
            }
        }
    }

    let errors: Vec<f64> = jobs
        .par_iter()
        .map(|(j, xi)| {
            let (xi_x0, rest) = xi.split_at(kx);
            let xi_u: Vec<Vec<f64>> = if ku == 0 {
                vec![Vec::new(); *j]
            } else {
                rest.chunks(ku).map(<[f64]>::to_vec).collect()
            };
            extract_witness(orc, result, xi_x0, &xi_u).map(|w| w.error)
        })
        .collect::<Result<_>>()?;

    let max_error = errors.iter().copied().fold(0.0, f64::max);
    let failures: Vec<FailedWitness> = jobs
        .iter()
        .zip(&errors)
        .filter(|(_, &e)| !(e <= tol))
        .take(16)
        .map(|((j, xi), &e)| FailedWitness {
            index: *j,
            coefficients: xi.clone(),
            error: e,
        })
        .collect();

    Ok(CertificationReport {
        passed: failures.is_empty(),
        seed,
        tolerance: tol,
        trials,
        checked_indices: indices,
        witnesses_checked: jobs.len(),
        max_error,
        failures,
    })
}
