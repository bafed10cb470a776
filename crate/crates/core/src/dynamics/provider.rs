use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, Matrix};
use crate::quadrature::{split_panels, Panel, QuadratureRule};

/// One piece of a piecewise-constant matrix function: `matrix` holds on
/// `(previous until, until]` (the first piece also owns the left end point).
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub until: f64,
    pub matrix: Matrix,
}

type Sampler = dyn Fn(f64) -> Matrix + Send + Sync;

/// A black-box time → matrix sampler with its declared discontinuities.
#[derive(Clone)]
pub struct Callback {
    sampler: Arc<Sampler>,
    rows: usize,
    cols: usize,
    breakpoints: Vec<f64>,
    singular_points: Vec<f64>,
    label: String,
    asserted_exponent: Option<f64>,
}

impl Callback {
    pub fn new(
        label: impl Into<String>,
        rows: usize,
        cols: usize,
        sampler: impl Fn(f64) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        Self {
            sampler: Arc::new(sampler),
            rows,
            cols,
            breakpoints: Vec::new(),
            singular_points: Vec::new(),
            label: label.into(),
            asserted_exponent: None,
        }
    }

    /// Times at which the sampler may jump.
    pub fn with_breakpoints(mut self, mut bp: Vec<f64>) -> Self {
        bp.sort_by(f64::total_cmp);
        bp.dedup();
        self.breakpoints = bp;
        self
    }

    /// Times near which the sampler is unbounded or non-smooth (integrable singularities).
    pub fn with_singular_points(mut self, sp: Vec<f64>) -> Self {
        self.singular_points = sp;
        self
    }

    /// User assertion that `∫‖B‖ᵖ < ∞` for this exponent; it cannot be checked.
    pub fn with_asserted_exponent(mut self, p: f64) -> Self {
        self.asserted_exponent = Some(p);
        self
    }
}

impl fmt::Debug for Callback {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Callback")
            .field("label", &self.label)
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

/// Source of the time-varying matrices `A(t)` and `B(t)`.
#[derive(Debug, Clone)]
pub enum MatrixProvider {
    Constant(Matrix),
    PiecewiseConstant(Vec<Segment>),
    /// `α(t)·I₂` with `α(0) = 0` and `α(t) = 1/(2√t)` otherwise.
    AcademicA,
    /// `e^{√t}` times the rotation by angle `t`.
    AcademicB,
    Callback(Callback),
}

impl MatrixProvider {
    pub fn piecewise(segments: Vec<(f64, Matrix)>) -> Self {
        Self::PiecewiseConstant(
            segments
                .into_iter()
                .map(|(until, matrix)| Segment { until, matrix })
                .collect(),
        )
    }

    /// Switching matrix of the two-mode converter: mode 1 on [0,1] ∪ [2,3], mode 2 elsewhere.
    pub fn dcdc_a(t_hi: f64) -> Self {
        let a1 = Matrix::from_row_slice(2, 2, &[-1.0 / 3.0, 0.0, 0.0, -1.0 / 6.0]);
        let a2 = Matrix::from_row_slice(2, 2, &[-0.5, -1.0 / 6.0, 1.0 / 6.0, -1.0 / 6.0]);
        Self::piecewise(vec![
            (1.0, a1.clone()),
            (2.0, a2.clone()),
            (3.0, a1),
            (t_hi.max(5.0), a2),
        ])
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            Self::Constant(m) => m.shape(),
            Self::PiecewiseConstant(s) => s.first().map(|s| s.matrix.shape()).unwrap_or((0, 0)),
            Self::AcademicA | Self::AcademicB => (2, 2),
            Self::Callback(c) => (c.rows, c.cols),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Constant(_) => "constant",
            Self::PiecewiseConstant(_) => "piecewise_constant",
            Self::AcademicA => "builtin_academic_A",
            Self::AcademicB => "builtin_academic_B",
            Self::Callback(_) => "callback",
        }
    }

    pub fn is_piecewise_constant(&self) -> bool {
        matches!(self, Self::Constant(_) | Self::PiecewiseConstant(_))
    }

    /// Value at `t`. Piecewise data is left-continuous at its breakpoints.
    pub fn eval(&self, t: f64) -> Matrix {
        match self {
            Self::Constant(m) => m.clone(),
            Self::PiecewiseConstant(segs) => segment_at(segs, t).matrix.clone(),
            Self::AcademicA => Matrix::identity(2, 2) * academic_alpha(t),
            Self::AcademicB => {
                let (s, c) = t.sin_cos();
                Matrix::from_row_slice(2, 2, &[c, -s, s, c]) * t.max(0.0).sqrt().exp()
            }
            Self::Callback(c) => (c.sampler)(t),
        }
    }

    /// Value at `t` seen from inside `panel`: at a breakpoint on the panel edge the
    /// piece belonging to the panel is used rather than the left-continuous value.
    pub fn eval_in(&self, t: f64, panel: &Panel) -> Matrix {
        match self {
            Self::PiecewiseConstant(segs) => segment_at(segs, panel.midpoint()).matrix.clone(),
            Self::Callback(c) if c.breakpoints.contains(&t) => {
                let nudge = 1e-9 * panel.width();
                (c.sampler)(t.clamp(panel.lo + nudge, panel.hi - nudge))
            }
            _ => self.eval(t),
        }
    }

    /// The constant value on `panel` when the provider is piecewise constant.
    pub fn constant_on(&self, panel: &Panel) -> Option<Matrix> {
        match self {
            Self::Constant(m) => Some(m.clone()),
            Self::PiecewiseConstant(segs) => Some(segment_at(segs, panel.midpoint()).matrix.clone()),
            _ => None,
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::PiecewiseConstant(segs) => segs.iter().map(|s| s.until).collect(),
            Self::Callback(c) => c.breakpoints.clone(),
            _ => Vec::new(),
        }
    }

    pub fn singular_points(&self) -> Vec<f64> {
        match self {
            Self::AcademicA | Self::AcademicB => vec![0.0],
            Self::Callback(c) => c.singular_points.clone(),
            _ => Vec::new(),
        }
    }

    /// Integrability exponent `p` for which `∫‖·‖ᵖ < ∞` is known (`∞` for bounded data).
    pub fn integrability_exponent(&self) -> Option<f64> {
        match self {
            Self::Callback(c) => c.asserted_exponent,
            // α ~ t^{-1/2} lies in Lᵖ for every p < 2; report a representative exponent.
            Self::AcademicA => Some(1.5),
            _ => Some(f64::INFINITY),
        }
    }

    /// `∫ₐᵇ ‖M(z)‖₂ dz`: exact for piecewise-constant data, composite Gauss–Legendre
    /// over panels split at `cuts` and graded toward `singular` otherwise.
    pub fn norm_integral(
        &self,
        a: f64,
        b: f64,
        cuts: &[f64],
        singular: &[f64],
        rule: &QuadratureRule,
    ) -> f64 {
        if b <= a {
            return 0.0;
        }
        match self {
            Self::Constant(m) => spectral_norm(m) * (b - a),
            Self::PiecewiseConstant(segs) => {
                let mut total = 0.0;
                let mut lo = a;
                for (k, s) in segs.iter().enumerate() {
                    let hi = if k + 1 == segs.len() { b } else { s.until.min(b) };
                    if hi > lo {
                        total += spectral_norm(&s.matrix) * (hi - lo);
                        lo = hi;
                    }
                    if lo >= b {
                        break;
                    }
                }
                total
            }
            _ => {
                let panels = split_panels(a, b, cuts, singular);
                panels
                    .iter()
                    .flat_map(|p| {
                        rule.points(std::slice::from_ref(p))
                            .into_iter()
                            .map(move |(t, w)| (t, w, *p))
                    })
                    .map(|(t, w, p)| w * spectral_norm(&self.eval_in(t, &p)))
                    .sum()
            }
        }
    }

    /// Segments of piecewise-constant data clipped to [s, t], in time order.
    pub(crate) fn pieces_between(&self, s: f64, t: f64) -> Option<Vec<(Matrix, f64)>> {
        match self {
            Self::Constant(m) => Some(vec![(m.clone(), t - s)]),
            Self::PiecewiseConstant(segs) => {
                let mut out = Vec::new();
                let mut lo = s;
                for (k, seg) in segs.iter().enumerate() {
                    if lo >= t {
                        break;
                    }
                    let hi = if k + 1 == segs.len() { t } else { seg.until.min(t) };
                    if hi > lo {
                        out.push((seg.matrix.clone(), hi - lo));
                        lo = hi;
                    }
                }
                Some(out)
            }
            _ => None,
        }
    }

    pub(crate) fn validate(&self, what: &'static str, t_hi: f64) -> Result<()> {
        let bad = |msg: String| Error::InvalidInput(format!("{what}: {msg}"));
        match self {
            Self::Constant(m) => {
                if m.iter().any(|v| !v.is_finite()) {
                    return Err(bad("non-finite matrix entry".into()));
                }
            }
            Self::PiecewiseConstant(segs) => {
                let first = segs.first().ok_or_else(|| bad("no segments".into()))?;
                let shape = first.matrix.shape();
                let mut prev = f64::NEG_INFINITY;
                for (k, s) in segs.iter().enumerate() {
                    if s.matrix.shape() != shape {
                        return Err(bad(format!(
                            "segment {k} has shape {:?}, expected {:?}",
                            s.matrix.shape(),
                            shape
                        )));
                    }
                    if s.matrix.iter().any(|v| !v.is_finite()) {
                        return Err(bad(format!("segment {k} has a non-finite entry")));
                    }
                    if !s.until.is_finite() || s.until <= prev {
                        return Err(bad(format!(
                            "segment end times must be strictly increasing (segment {k} ends at {})",
                            s.until
                        )));
                    }
                    prev = s.until;
                }
                if prev < t_hi {
                    return Err(bad(format!(
                        "segments end at {prev}, before the end of the time interval {t_hi}"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub(crate) fn describe(&self) -> String {
        match self {
            Self::Constant(m) => format!("constant{}", describe_matrix(m)),
            Self::PiecewiseConstant(segs) => {
                let body: Vec<String> = segs
                    .iter()
                    .map(|s| format!("{}:{}", s.until, describe_matrix(&s.matrix)))
                    .collect();
                format!("piecewise[{}]", body.join(","))
            }
            Self::AcademicA => "builtin:academic:A".into(),
            Self::AcademicB => "builtin:academic:B".into(),
            Self::Callback(c) => format!("callback:{}:{}x{}:{:?}", c.label, c.rows, c.cols, c.breakpoints),
        }
    }
}

fn segment_at(segs: &[Segment], t: f64) -> &Segment {
    segs.iter()
        .find(|s| t <= s.until)
        .unwrap_or_else(|| segs.last().expect("validated non-empty"))
}

pub(crate) fn academic_alpha(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        0.5 / t.sqrt()
    }
}

pub(crate) fn describe_matrix(m: &Matrix) -> String {
    let rows: Vec<String> = m
        .row_iter()
        .map(|r| {
            let v: Vec<String> = r.iter().map(|x| format!("{x:?}")).collect();
            format!("[{}]", v.join(","))
        })
        .collect();
    format!("[{}]", rows.join(","))
}
