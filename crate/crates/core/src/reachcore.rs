//! The uniform time grid and the constant-input recursion
//! `Λ₀ = X₀, Λᵢ = φ(tᵢ,tᵢ₋₁)Λᵢ₋₁ + LᵢU` with `Lᵢ = ∫_{tᵢ₋₁}^{tᵢ} φ(tᵢ,s)B(s) ds`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{AccuracyClass, TransitionMode, TransitionOracle};
use crate::error::{Error, Result};
use crate::linalg::{matrix_exponential, solve_well_conditioned, Matrix};
use crate::quadrature::{split_panels, QuadratureRule};
use crate::setkernel::Zonotope;

/// Closed-form segment integrals are only used below this condition estimate of `A`.
const MAX_CLOSED_FORM_CONDITION: f64 = 1e8;

/// `tᵢ = t_lo + i·τ`, `τ = (t_hi − t_lo)/N`, with `t_N = t_hi` exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    steps: usize,
    points: Vec<f64>,
    tau: f64,
}

impl TimeGrid {
    pub fn new(t_lo: f64, t_hi: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidInput("number of steps must be at least 1".into()));
        }
        if !(t_lo < t_hi) {
            return Err(Error::InvalidInput(format!("empty time interval [{t_lo}, {t_hi}]")));
        }
        let tau = (t_hi - t_lo) / steps as f64;
        let mut points: Vec<f64> = (0..=steps).map(|i| t_lo + i as f64 * tau).collect();
        points[steps] = t_hi;
        Ok(Self { steps, points, tau })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn t(&self, i: usize) -> f64 {
        self.points[i]
    }
}

/// `Lᵢ = ∫_{tᵢ₋₁}^{tᵢ} φ(tᵢ,s)B(s) ds`, so that `Wᵢ = LᵢU`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInputMap {
    pub index: usize,
    pub matrix: Matrix,
}

/// `Lᵢ` with the default composite rule (4 substeps of 5-point Gauss–Legendre per panel).
pub fn step_input_map(orc: &TransitionOracle<'_>, grid: &TimeGrid, i: usize) -> Result<StepInputMap> {
    step_input_map_with(orc, grid, i, &QuadratureRule::default())
}

/// `Lᵢ` with an explicit quadrature rule.
///
/// The cell is split at every breakpoint of the data. On a panel where `A` and
/// `B` are both constant the integral is `φ(tᵢ, b)·A⁻¹(e^{AΔ} − I)·B`, provided
/// `A` is well conditioned; every other panel goes through the quadrature rule.
pub fn step_input_map_with(
    orc: &TransitionOracle<'_>,
    grid: &TimeGrid,
    i: usize,
    rule: &QuadratureRule,
) -> Result<StepInputMap> {
    if i == 0 || i > grid.steps() {
        return Err(Error::InvalidInput(format!(
            "step index {i} outside 1..={}",
            grid.steps()
        )));
    }
    let sys = orc.system();
    let (lo, hi) = (grid.t(i - 1), grid.t(i));
    let ti = hi;
    let (n, m) = (sys.state_dim(), sys.input_dim());
    let mut total = Matrix::zeros(n, m);

    for panel in split_panels(lo, hi, sys.breakpoints(), sys.singular_points()) {
        if let (Some(a), Some(b)) = (sys.a().constant_on(&panel), sys.b().constant_on(&panel)) {
            if let Some(piece) = constant_segment_integral(&a, &b, panel.width())? {
                total += orc.transition(ti, panel.hi)? * piece;
                continue;
            }
        }
        for (s, w) in rule.points(std::slice::from_ref(&panel)) {
            total += orc.transition(ti, s)? * sys.b().eval_in(s, &panel) * w;
        }
    }
    if total.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("step input map"));
    }
    Ok(StepInputMap {
        index: i,
        matrix: total,
    })
}

// ∫₀^Δ e^{Aτ} dτ · B = A⁻¹(e^{AΔ} − I)B, or None when A is (nearly) singular.
fn constant_segment_integral(a: &Matrix, b: &Matrix, dt: f64) -> Result<Option<Matrix>> {
    let n = a.nrows();
    let rhs = (matrix_exponential(&(a * dt))? - Matrix::identity(n, n)) * b;
    Ok(solve_well_conditioned(a, &rhs, MAX_CLOSED_FORM_CONDITION))
}

/// Transition and input map of one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct StepData {
    pub transition: Matrix,
    pub input_map: Matrix,
}

/// The sets `Λ₀ … Λ_N` on a uniform grid.
#[derive(Debug, Clone)]
pub struct ReachResult {
    grid: TimeGrid,
    lambdas: Vec<Zonotope>,
    steps: Vec<StepData>,
    fingerprint: String,
    system_name: String,
    mode: TransitionMode,
    accuracy_class: AccuracyClass,
}

/// Runs the constant-input recursion with `steps` grid cells.
///
/// The per-cell matrices are independent and computed in parallel; the set
/// recursion itself runs in order.
pub fn reach_sets(orc: &TransitionOracle<'_>, steps: usize) -> Result<ReachResult> {
    let sys = orc.system();
    let grid = TimeGrid::new(sys.t_lo(), sys.t_hi(), steps)?;

    let step_data: Vec<StepData> = (1..=steps)
        .into_par_iter()
        .map(|i| {
            Ok(StepData {
                transition: orc.transition(grid.t(i), grid.t(i - 1))?,
                input_map: step_input_map(orc, &grid, i)?.matrix,
            })
        })
        .collect::<Result<_>>()?;

    let mut lambdas = Vec::with_capacity(steps + 1);
    lambdas.push(sys.x0().clone());
    for data in &step_data {
        let prev = lambdas.last().expect("non-empty");
        let w = sys.u().linear_map(&data.input_map)?;
        lambdas.push(prev.linear_map(&data.transition)?.minkowski_sum(&w)?);
    }

    Ok(ReachResult {
        grid,
        lambdas,
        steps: step_data,
        fingerprint: sys.fingerprint(),
        system_name: sys.name().to_string(),
        mode: orc.mode(),
        accuracy_class: orc.accuracy_class(),
    })
}

/// The tube under-approximation `Λ₀ ∪ … ∪ Λ_N`, kept as its convex pieces.
pub fn tube(result: &ReachResult) -> &[Zonotope] {
    result.lambdas()
}

/// Outcome of checking every computed set against the a priori bound `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub bound: f64,
    pub max_support: f64,
    pub holds: bool,
}

impl ReachResult {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn lambdas(&self) -> &[Zonotope] {
        &self.lambdas
    }

    pub fn final_set(&self) -> &Zonotope {
        self.lambdas.last().expect("at least X0")
    }

    /// Transition and input map of cell `i` (1-based).
    pub fn step(&self, i: usize) -> &StepData {
        &self.steps[i - 1]
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn system_name(&self) -> &str {
        &self.system_name
    }

    pub fn mode(&self) -> TransitionMode {
        self.mode
    }

    pub fn accuracy_class(&self) -> AccuracyClass {
        self.accuracy_class
    }

    /// `max |h_{Λᵢ}(d)|` over all sets and `directions` unit vectors, compared
    /// with the growth bound `K` of the system (relative margin 1e-6).
    pub fn growth_check(&self, sys: &crate::dynamics::SystemSpec, directions: usize) -> GrowthCheck {
        let bound = sys.growth_bound(directions);
        let dirs = crate::setkernel::direction_grid(sys.state_dim(), directions);
        let max_support = self
            .lambdas
            .par_iter()
            .map(|z| {
                dirs.iter()
                    .map(|d| z.support_unchecked(d).abs())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        GrowthCheck {
            bound,
            max_support,
            holds: max_support <= bound * (1.0 + 1e-6),
        }
    }

    pub fn to_file(&self) -> ReachResultFile {
        ReachResultFile {
            system: self.system_name.clone(),
            fingerprint: self.fingerprint.clone(),
            mode: self.mode,
            accuracy_class: self.accuracy_class,
            grid: self.grid.points.clone(),
            sets: self.lambdas.clone(),
        }
    }
}

/// Serialized form of a [`ReachResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachResultFile {
    pub system: String,
    pub fingerprint: String,
    pub mode: TransitionMode,
    pub accuracy_class: AccuracyClass,
    pub grid: Vec<f64>,
    pub sets: Vec<Zonotope>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{academic, dcdc, MatrixProvider, SystemSpec};
    use crate::linalg::Vector;
    use approx::assert_relative_eq;

    fn drift_free(b: Matrix) -> SystemSpec {
        SystemSpec::new(
            "drift-free",
            0.0,
            1.0,
            MatrixProvider::Constant(Matrix::zeros(2, 2)),
            MatrixProvider::Constant(b),
            Zonotope::singleton(Vector::zeros(2)).unwrap(),
            Zonotope::unit_box(2),
        )
        .unwrap()
    }

    #[test]
    fn grid_is_uniform_and_pinned() {
        let g = TimeGrid::new(0.0, 5.0, 7).unwrap();
        assert_eq!(g.points().len(), 8);
        assert_eq!(g.t(0), 0.0);
        assert_eq!(g.t(7), 5.0);
        for w in g.points().windows(2) {
            assert!((w[1] - w[0] - g.tau()).abs() < 1e-12);
        }
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn step_map_without_drift_is_tau_identity() {
        let s = drift_free(Matrix::identity(2, 2));
        let orc = TransitionOracle::preferred(&s);
        let grid = TimeGrid::new(0.0, 1.0, 4).unwrap();
        for i in 1..=4 {
            let l = step_input_map(&orc, &grid, i).unwrap().matrix;
            assert!((l - Matrix::identity(2, 2) * 0.25).abs().max() < 1e-15);
        }
        assert!(step_input_map(&orc, &grid, 0).is_err());
        assert!(step_input_map(&orc, &grid, 5).is_err());
    }

    #[test]
    fn academic_single_step_map() {
        let a = academic();
        let orc = TransitionOracle::preferred(&a);
        let grid = TimeGrid::new(0.0, 1.0, 1).unwrap();
        let l = step_input_map(&orc, &grid, 1).unwrap().matrix;
        let e = std::f64::consts::E;
        let (s, c) = 1f64.sin_cos();
        let expected = Matrix::from_row_slice(2, 2, &[s, -(1.0 - c), 1.0 - c, s]) * e;
        assert!((&l - &expected).abs().max() < 1e-12, "{l}");
        assert_relative_eq!(l[(0, 0)], 2.287355, epsilon = 1e-6);
        assert_relative_eq!(l[(0, 1)], -1.249588, epsilon = 1e-6);
    }

    #[test]
    fn dcdc_closed_form_segment() {
        let d = dcdc();
        let orc = TransitionOracle::preferred(&d);
        let grid = TimeGrid::new(0.0, 5.0, 10).unwrap();
        let l = step_input_map(&orc, &grid, 1).unwrap().matrix;
        let dt: f64 = 0.5;
        assert_relative_eq!(l[(0, 0)], (1.0 - (-dt / 3.0).exp()) * 3.0, max_relative = 1e-13);
        assert_relative_eq!(l[(1, 1)], (1.0 - (-dt / 6.0).exp()) * 6.0, max_relative = 1e-13);
        assert!(l[(0, 1)].abs() < 1e-16);
    }

    #[test]
    fn closed_form_and_quadrature_agree_across_a_switch() {
        // The second cell, [5/7, 10/7], straddles the switch at t = 1.
        let d = dcdc();
        let grid = TimeGrid::new(0.0, 5.0, 7).unwrap();
        let exact = step_input_map(&TransitionOracle::preferred(&d), &grid, 2).unwrap().matrix;
        let (lo, hi) = (grid.t(1), grid.t(2));
        let mut quad = Matrix::zeros(2, 2);
        let orc = TransitionOracle::preferred(&d);
        for panel in split_panels(lo, hi, d.breakpoints(), &[]) {
            for (s, w) in (QuadratureRule { substeps: 16, nodes: 8 }).points(&[panel]) {
                quad += orc.transition(hi, s).unwrap() * w;
            }
        }
        let diff = (&exact - &quad).abs().max();
        assert!(diff < 1e-13, "{diff:e}\n{exact}{quad}");
    }

    #[test]
    fn zero_dynamics_keep_x0() {
        let s = SystemSpec::new(
            "still",
            0.0,
            1.0,
            MatrixProvider::Constant(Matrix::zeros(2, 2)),
            MatrixProvider::Constant(Matrix::zeros(2, 2)),
            Zonotope::unit_box(2),
            Zonotope::unit_box(2),
        )
        .unwrap();
        let r = reach_sets(&TransitionOracle::preferred(&s), 3).unwrap();
        for z in r.lambdas() {
            for d in crate::setkernel::direction_grid(2, 36) {
                assert_relative_eq!(z.support(&d).unwrap(), s.x0().support(&d).unwrap(), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn drift_free_final_set_is_exact() {
        let s = drift_free(Matrix::identity(2, 2));
        let orc = TransitionOracle::preferred(&s);
        for n in [1, 2, 7] {
            let r = reach_sets(&orc, n).unwrap();
            let h = r.final_set().support(&Vector::from_vec(vec![1.0, 0.0])).unwrap();
            assert_relative_eq!(h, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn tube_of_drift_free_system() {
        let s = drift_free(Matrix::identity(2, 2));
        let r = reach_sets(&TransitionOracle::preferred(&s), 2).unwrap();
        let e1 = Vector::from_vec(vec![1.0, 0.0]);
        let h: Vec<f64> = tube(&r).iter().map(|z| z.support(&e1).unwrap()).collect();
        assert_eq!(h.len(), 3);
        assert_relative_eq!(h[0], 0.0);
        assert_relative_eq!(h[1], 0.5, epsilon = 1e-15);
        assert_relative_eq!(h[2], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn academic_one_step_support() {
        let a = academic();
        let r = reach_sets(&TransitionOracle::preferred(&a), 1).unwrap();
        assert_eq!(tube(&r).len(), 2);
        let h = r.final_set().support(&Vector::from_vec(vec![1.0, 0.0])).unwrap();
        assert_relative_eq!(h, 3.536943, epsilon = 1e-6);
    }

    #[test]
    fn dcdc_tube_starts_at_x0() {
        let d = dcdc();
        let r = reach_sets(&TransitionOracle::preferred(&d), 5).unwrap();
        assert_eq!(tube(&r).len(), 6);
        assert_eq!(&tube(&r)[0], d.x0());
        let b = Zonotope::from_box(&[0.9, 4.9], &[1.1, 5.1]).unwrap();
        assert_eq!(tube(&r)[0], b);
    }

    #[test]
    fn generator_bookkeeping() {
        let d = dcdc();
        let r = reach_sets(&TransitionOracle::preferred(&d), 12).unwrap();
        for (i, z) in r.lambdas().iter().enumerate() {
            assert_eq!(z.num_generators(), d.x0().num_generators() + i * d.u().num_generators());
            assert_eq!(z.dim(), 2);
        }
    }

    #[test]
    fn growth_bound_holds_on_builtins() {
        for sys in [academic(), dcdc()] {
            let r = reach_sets(&TransitionOracle::preferred(&sys), 20).unwrap();
            let g = r.growth_check(&sys, 360);
            assert!(g.holds, "{}: {:?}", sys.name(), g);
        }
    }

    #[test]
    fn step_map_norm_bound() {
        let d = dcdc();
        let orc = TransitionOracle::preferred(&d);
        let grid = TimeGrid::new(0.0, 5.0, 9).unwrap();
        let growth = d.a_norm_integral(0.0, 5.0).exp();
        for i in 1..=9 {
            let l = step_input_map(&orc, &grid, i).unwrap().matrix;
            let beta = d.b_norm_integral(grid.t(i - 1), grid.t(i));
            assert!(crate::linalg::spectral_norm(&l) <= growth * beta * (1.0 + 1e-9));
        }
    }
}
