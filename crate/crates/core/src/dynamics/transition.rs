use serde::{Deserialize, Serialize};

use super::provider::MatrixProvider;
use super::system::SystemSpec;
use crate::error::{Error, Result};
use crate::linalg::{all_finite, matrix_exponential, Matrix};
use crate::quadrature::{split_panels, Panel};

/// Minimum RK4 substeps inside a panel of a geometric refinement.
const GRADED_MIN_STEPS: usize = 32;

/// Slack for grid points that land a rounding error outside the interval.
const TIME_SLACK: f64 = 1e-12;

/// How `φ(t, s)` is produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionMode {
    /// Analytic formula of the provider (built-ins and piecewise-constant data).
    ClosedForm,
    /// Ordered product of matrix exponentials over the constant pieces of `A`.
    ExpmPiecewise,
    /// Fixed-step RK4 on `∂ₜΦ = A(t)Φ`, `Φ(s) = I`, split at breakpoints.
    OdeNumeric { h_max: f64 },
}

impl TransitionMode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ClosedForm => "closed_form",
            Self::ExpmPiecewise => "expm_piecewise",
            Self::OdeNumeric { .. } => "ode_numeric",
        }
    }
}

/// Declared accuracy of transition matrices; the subset guarantee of the
/// computed sets holds up to this accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyClass {
    Exact,
    Tol(f64),
}

/// Evaluates the state transition matrix of a system.
#[derive(Debug, Clone, Copy)]
pub struct TransitionOracle<'a> {
    system: &'a SystemSpec,
    mode: TransitionMode,
}

impl<'a> TransitionOracle<'a> {
    pub fn new(system: &'a SystemSpec, mode: TransitionMode) -> Result<Self> {
        match mode {
            TransitionMode::ClosedForm => {
                if !(system.a().is_piecewise_constant() || matches!(system.a(), MatrixProvider::AcademicA)) {
                    return Err(Error::UnsupportedMode {
                        mode: mode.name(),
                        reason: format!("no analytic transition for A of kind {}", system.a().kind()),
                    });
                }
            }
            TransitionMode::ExpmPiecewise => {
                if !system.a().is_piecewise_constant() {
                    return Err(Error::UnsupportedMode {
                        mode: mode.name(),
                        reason: format!("A of kind {} is not piecewise constant", system.a().kind()),
                    });
                }
            }
            TransitionMode::OdeNumeric { h_max } => {
                if !(h_max > 0.0 && h_max.is_finite()) {
                    return Err(Error::InvalidInput(format!("h_max must be positive, got {h_max}")));
                }
            }
        }
        Ok(Self { system, mode })
    }

    /// Closed form where available, RK4 with the default step otherwise.
    pub fn preferred(system: &'a SystemSpec) -> Self {
        Self::new(system, TransitionMode::ClosedForm)
            .unwrap_or_else(|_| Self::ode_numeric(system, None))
    }

    /// RK4 oracle; `h_max` defaults to 1e-3 of the interval length.
    pub fn ode_numeric(system: &'a SystemSpec, h_max: Option<f64>) -> Self {
        let h_max = h_max.unwrap_or(1e-3 * (system.t_hi() - system.t_lo()));
        Self {
            system,
            mode: TransitionMode::OdeNumeric { h_max },
        }
    }

    pub fn system(&self) -> &'a SystemSpec {
        self.system
    }

    pub fn mode(&self) -> TransitionMode {
        self.mode
    }

    pub fn accuracy_class(&self) -> AccuracyClass {
        match self.mode {
            TransitionMode::ClosedForm | TransitionMode::ExpmPiecewise => AccuracyClass::Exact,
            // Nominal fourth-order local error scale.
            TransitionMode::OdeNumeric { h_max } => AccuracyClass::Tol(h_max.powi(4)),
        }
    }

    /// `φ(t, s)` for `t_lo ≤ s ≤ t ≤ t_hi`.
    pub fn transition(&self, t: f64, s: f64) -> Result<Matrix> {
        let (t, s) = self.check_times(t, s)?;
        let n = self.system.state_dim();
        if t == s {
            return Ok(Matrix::identity(n, n));
        }
        let phi = match self.mode {
            TransitionMode::ClosedForm => match self.system.a() {
                MatrixProvider::AcademicA => {
                    Matrix::identity(n, n) * (t.max(0.0).sqrt() - s.max(0.0).sqrt()).exp()
                }
                _ => self.expm_product(t, s)?,
            },
            TransitionMode::ExpmPiecewise => self.expm_product(t, s)?,
            TransitionMode::OdeNumeric { h_max } => {
                let panels = split_panels(s, t, self.system.breakpoints(), self.system.singular_points());
                let a = self.system.a();
                rk4_over_panels(&panels, h_max, Matrix::identity(n, n), |tau, panel, x| {
                    a.eval_in(tau, panel) * x
                })
            }
        };
        if !all_finite(&phi) {
            return Err(Error::NonFinite("transition matrix"));
        }
        Ok(phi)
    }

    /// `e^{∫ₛᵗ ‖A(z)‖ dz}`, an upper bound on `‖φ(t, s)‖₂`.
    pub fn transition_norm_bound(&self, t: f64, s: f64) -> Result<f64> {
        let (t, s) = self.check_times(t, s)?;
        Ok(self.system.a_norm_integral(s, t).exp())
    }

    fn expm_product(&self, t: f64, s: f64) -> Result<Matrix> {
        let n = self.system.state_dim();
        let pieces = self
            .system
            .a()
            .pieces_between(s, t)
            .ok_or(Error::UnsupportedMode {
                mode: "expm_piecewise",
                reason: "A is not piecewise constant".into(),
            })?;
        let mut phi = Matrix::identity(n, n);
        for (a, dt) in pieces {
            phi = matrix_exponential(&(a * dt))? * phi;
        }
        Ok(phi)
    }

    fn check_times(&self, t: f64, s: f64) -> Result<(f64, f64)> {
        let (lo, hi) = (self.system.t_lo(), self.system.t_hi());
        let slack = TIME_SLACK * (hi - lo);
        for x in [t, s] {
            if !(x >= lo - slack && x <= hi + slack) {
                return Err(Error::TimeOutOfRange { t: x, lo, hi });
            }
        }
        if s > t {
            return Err(Error::BackwardTransition { t, s });
        }
        Ok((t.clamp(lo, hi), s.clamp(lo, hi)))
    }
}

/// Classical RK4 for `x' = f(t, x)` across consecutive panels, each cut into
/// `ceil(width / h_max)` equal steps (at least `GRADED_MIN_STEPS` on graded panels).
pub(crate) fn rk4_over_panels<F>(panels: &[Panel], h_max: f64, mut x: Matrix, f: F) -> Matrix
where
    F: Fn(f64, &Panel, &Matrix) -> Matrix,
{
    for panel in panels {
        let mut steps = (panel.width() / h_max).ceil().max(1.0) as usize;
        if panel.graded {
            steps = steps.max(GRADED_MIN_STEPS);
        }
        let h = panel.width() / steps as f64;
        for k in 0..steps {
            let t0 = panel.lo + k as f64 * h;
            let t1 = if k + 1 == steps { panel.hi } else { t0 + h };
            let h = t1 - t0;
            let tm = t0 + 0.5 * h;
            let k1 = f(t0, panel, &x);
            let k2 = f(tm, panel, &(&x + &k1 * (0.5 * h)));
            let k3 = f(tm, panel, &(&x + &k2 * (0.5 * h)));
            let k4 = f(t1, panel, &(&x + &k3 * h));
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::system::{academic, dcdc};
    use crate::linalg::spectral_norm;
    use crate::setkernel::Zonotope;
    use approx::assert_relative_eq;

    fn max_abs(m: &Matrix) -> f64 {
        m.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    #[test]
    fn same_time_is_identity_in_every_mode() {
        let d = dcdc();
        for orc in [
            TransitionOracle::new(&d, TransitionMode::ClosedForm).unwrap(),
            TransitionOracle::new(&d, TransitionMode::ExpmPiecewise).unwrap(),
            TransitionOracle::ode_numeric(&d, None),
        ] {
            assert_eq!(orc.transition(2.5, 2.5).unwrap(), Matrix::identity(2, 2));
        }
    }

    #[test]
    fn dcdc_first_mode_transition() {
        let d = dcdc();
        let phi = TransitionOracle::new(&d, TransitionMode::ExpmPiecewise)
            .unwrap()
            .transition(1.0, 0.0)
            .unwrap();
        assert_relative_eq!(phi[(0, 0)], (-1.0f64 / 3.0).exp(), max_relative = 1e-14);
        assert_relative_eq!(phi[(1, 1)], (-1.0f64 / 6.0).exp(), max_relative = 1e-14);
        assert_relative_eq!(phi[(0, 0)], 0.716531, epsilon = 1e-6);
        assert_relative_eq!(phi[(1, 1)], 0.846482, epsilon = 1e-6);
        assert_eq!(phi[(0, 1)], 0.0);
    }

    #[test]
    fn academic_closed_form_transition() {
        let a = academic();
        let orc = TransitionOracle::new(&a, TransitionMode::ClosedForm).unwrap();
        let phi = orc.transition(1.0, 0.0).unwrap();
        assert_relative_eq!(phi[(0, 0)], std::f64::consts::E, max_relative = 1e-15);
        #[allow(clippy::approx_constant)]
        let rounded = 2.718282;
        assert_relative_eq!(phi[(1, 1)], rounded, epsilon = 1e-6);
        assert_eq!(phi[(1, 0)], 0.0);
    }

    #[test]
    fn academic_rk4_from_singular_start() {
        let a = academic();
        let phi = TransitionOracle::ode_numeric(&a, None).transition(1.0, 0.0).unwrap();
        assert_relative_eq!(phi[(0, 0)], std::f64::consts::E, max_relative = 1e-7);
    }

    #[test]
    fn expm_is_unavailable_for_time_varying_a() {
        let a = academic();
        assert!(matches!(
            TransitionOracle::new(&a, TransitionMode::ExpmPiecewise),
            Err(Error::UnsupportedMode { .. })
        ));
    }

    #[test]
    fn backward_and_out_of_range_rejected() {
        let d = dcdc();
        let orc = TransitionOracle::preferred(&d);
        assert!(matches!(orc.transition(1.0, 2.0), Err(Error::BackwardTransition { .. })));
        assert!(matches!(orc.transition(6.0, 0.0), Err(Error::TimeOutOfRange { .. })));
        assert!(matches!(orc.transition(1.0, -0.5), Err(Error::TimeOutOfRange { .. })));
    }

    #[test]
    fn norm_bound_examples() {
        let z = SystemSpec::new(
            "zero",
            0.0,
            1.0,
            MatrixProvider::Constant(Matrix::zeros(2, 2)),
            MatrixProvider::Constant(Matrix::identity(2, 2)),
            Zonotope::unit_box(2),
            Zonotope::unit_box(2),
        )
        .unwrap();
        assert_eq!(TransitionOracle::preferred(&z).transition_norm_bound(1.0, 0.0).unwrap(), 1.0);

        let d = dcdc();
        let b = TransitionOracle::preferred(&d).transition_norm_bound(1.0, 0.0).unwrap();
        assert_relative_eq!(b, (1.0f64 / 3.0).exp(), max_relative = 1e-14);
        assert_relative_eq!(b, 1.395612, epsilon = 1e-6);

        let a = academic();
        let b = TransitionOracle::preferred(&a).transition_norm_bound(1.0, 0.0).unwrap();
        assert_relative_eq!(b, std::f64::consts::E, max_relative = 1e-10);
    }

    #[test]
    fn norm_estimate_holds_on_dcdc() {
        let d = dcdc();
        let orc = TransitionOracle::preferred(&d);
        for &(s, t) in &[(0.0, 5.0), (0.3, 2.7), (1.5, 4.0)] {
            let phi = orc.transition(t, s).unwrap();
            assert!(spectral_norm(&phi) <= orc.transition_norm_bound(t, s).unwrap() * (1.0 + 1e-9));
        }
    }

    #[test]
    fn rk4_matches_expm_across_switches() {
        let d = dcdc();
        let exact = TransitionOracle::new(&d, TransitionMode::ExpmPiecewise).unwrap();
        let rk4 = TransitionOracle::ode_numeric(&d, Some(1e-3));
        let diff = exact.transition(4.7, 0.2).unwrap() - rk4.transition(4.7, 0.2).unwrap();
        assert!(max_abs(&diff) < 1e-10);
    }
}
