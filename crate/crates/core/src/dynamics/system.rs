use sha2::{Digest, Sha256};

use super::provider::{describe_matrix, MatrixProvider};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::quadrature::{interior_times, QuadratureRule};
use crate::setkernel::Zonotope;

/// Problem data of `ẋ = A(t)x + B(t)u(t)` on `[t_lo, t_hi]` with `x(t_lo) ∈ X₀`
/// and `u(t) ∈ U`.
///
/// Construction checks the standing preconditions:
/// (i) the time interval is compact with non-zero length;
/// (ii) `A` is an integrable `n×n` matrix function;
/// (iii) `B` is an `n×m` matrix function with `∫‖B‖ᵖ < ∞` for some `p > 1`;
/// (iv) `X₀ ⊂ ℝⁿ` and `U ⊂ ℝᵐ` carry the state and input dimensions;
/// (v) `X₀` and `U` are non-empty, convex and compact.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    name: String,
    t_lo: f64,
    t_hi: f64,
    a: MatrixProvider,
    b: MatrixProvider,
    x0: Zonotope,
    u: Zonotope,
    breakpoints: Vec<f64>,
    singular_points: Vec<f64>,
}

impl SystemSpec {
    pub fn new(
        name: impl Into<String>,
        t_lo: f64,
        t_hi: f64,
        a: MatrixProvider,
        b: MatrixProvider,
        x0: Zonotope,
        u: Zonotope,
    ) -> Result<Self> {
        let assumption = |assumption: &'static str, message: String| Error::Assumption {
            assumption,
            message,
        };
        if !(t_lo.is_finite() && t_hi.is_finite()) {
            return Err(assumption("i", format!("time interval [{t_lo}, {t_hi}] is not finite")));
        }
        if !(t_lo < t_hi) {
            return Err(assumption(
                "i",
                format!("time interval [{t_lo}, {t_hi}] must have t_lo < t_hi"),
            ));
        }
        if x0.dim() == 0 {
            return Err(assumption("v", "initial set X0 is empty".into()));
        }
        if u.dim() == 0 {
            return Err(assumption("v", "input set U is empty".into()));
        }
        let n = x0.dim();
        let m = u.dim();

        a.validate("A", t_hi)
            .map_err(|e| assumption("ii", e.to_string()))?;
        if a.shape() != (n, n) {
            return Err(assumption(
                "ii",
                format!("A has shape {:?}, expected {n}x{n} to match X0", a.shape()),
            ));
        }
        b.validate("B", t_hi)
            .map_err(|e| assumption("iii", e.to_string()))?;
        if b.shape() != (n, m) {
            return Err(assumption(
                "iii",
                format!(
                    "B has shape {:?}, expected {n}x{m} to match X0 and U",
                    b.shape()
                ),
            ));
        }

        let breakpoints = interior_times(
            t_lo,
            t_hi,
            a.breakpoints().into_iter().chain(b.breakpoints()),
        );
        let mut singular_points: Vec<f64> = a
            .singular_points()
            .into_iter()
            .chain(b.singular_points())
            .filter(|&c| c >= t_lo && c <= t_hi)
            .collect();
        singular_points.sort_by(f64::total_cmp);
        singular_points.dedup();

        Ok(Self {
            name: name.into(),
            t_lo,
            t_hi,
            a,
            b,
            x0,
            u,
            breakpoints,
            singular_points,
        })
    }

    /// The same dynamics restricted to `[t_lo, t_hi]` with a new initial set.
    pub fn with_window(&self, t_lo: f64, t_hi: f64, x0: Zonotope) -> Result<Self> {
        Self::new(
            self.name.clone(),
            t_lo,
            t_hi,
            self.a.clone(),
            self.b.clone(),
            x0,
            self.u.clone(),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn t_lo(&self) -> f64 {
        self.t_lo
    }
    pub fn t_hi(&self) -> f64 {
        self.t_hi
    }
    pub fn state_dim(&self) -> usize {
        self.x0.dim()
    }
    pub fn input_dim(&self) -> usize {
        self.u.dim()
    }
    pub fn a(&self) -> &MatrixProvider {
        &self.a
    }
    pub fn b(&self) -> &MatrixProvider {
        &self.b
    }
    pub fn x0(&self) -> &Zonotope {
        &self.x0
    }
    pub fn u(&self) -> &Zonotope {
        &self.u
    }

    /// Interior times where `A` or `B` may jump, sorted.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Times in the interval where `A` or `B` has an integrable singularity.
    pub fn singular_points(&self) -> &[f64] {
        &self.singular_points
    }

    /// Asserted exponent `p` with `∫‖B‖ᵖ < ∞`; `None` when nobody vouched for it.
    pub fn input_exponent(&self) -> Option<f64> {
        self.b.integrability_exponent()
    }

    pub fn contains_time(&self, t: f64) -> bool {
        t >= self.t_lo && t <= self.t_hi
    }

    /// `∫ₛᵗ ‖A(z)‖ dz`.
    pub fn a_norm_integral(&self, s: f64, t: f64) -> f64 {
        self.a.norm_integral(s, t, &self.breakpoints, &self.singular_points, &QuadratureRule::default())
    }

    /// `∫ₛᵗ ‖B(z)‖ dz`.
    pub fn b_norm_integral(&self, s: f64, t: f64) -> f64 {
        self.b.norm_integral(s, t, &self.breakpoints, &self.singular_points, &QuadratureRule::default())
    }

    /// A priori bound `K = e^{∫‖A‖}(‖X₀‖ + ‖U‖·∫‖B‖)` on the norm of every
    /// reachable set over the whole interval; set norms are estimated on
    /// `directions` support directions.
    pub fn growth_bound(&self, directions: usize) -> f64 {
        let m = self.a_norm_integral(self.t_lo, self.t_hi);
        let beta = self.b_norm_integral(self.t_lo, self.t_hi);
        m.exp() * (self.x0.norm_estimate(directions) + self.u.norm_estimate(directions) * beta)
    }

    /// SHA-256 over a canonical description of the problem data.
    pub fn fingerprint(&self) -> String {
        let z = |z: &Zonotope| {
            let gens: Vec<String> = z
                .generators()
                .iter()
                .map(|g| describe_matrix(&Matrix::from_column_slice(g.len(), 1, g.as_slice())))
                .collect();
            format!("{}|{}", describe_vector(z.center()), gens.join(";"))
        };
        let text = format!(
            "t=[{:?},{:?}]\nA={}\nB={}\nX0={}\nU={}",
            self.t_lo,
            self.t_hi,
            self.a.describe(),
            self.b.describe(),
            z(&self.x0),
            z(&self.u)
        );
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn describe_vector(v: &Vector) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
    format!("[{}]", parts.join(","))
}

/// Time-varying example with an integrable but unbounded drift:
/// `A(t) = I/(2√t)`, `B(t) = e^{√t}·rot(t)` on [0, 1], `X₀ = {0}`, `U = [-1,1]²`.
pub fn academic() -> SystemSpec {
    SystemSpec::new(
        "academic",
        0.0,
        1.0,
        MatrixProvider::AcademicA,
        MatrixProvider::AcademicB,
        Zonotope::singleton(Vector::zeros(2)).expect("valid"),
        Zonotope::unit_box(2),
    )
    .expect("academic system is well formed")
}

/// Switched two-mode converter on [0, 5] with `B = I`,
/// `X₀ = [0.9,1.1]×[4.9,5.1]` and `U = [2/15, 8/15]×{0}`.
pub fn dcdc() -> SystemSpec {
    SystemSpec::new(
        "dcdc",
        0.0,
        5.0,
        MatrixProvider::dcdc_a(5.0),
        MatrixProvider::Constant(Matrix::identity(2, 2)),
        Zonotope::from_box(&[0.9, 4.9], &[1.1, 5.1]).expect("valid"),
        Zonotope::from_box(&[2.0 / 15.0, 0.0], &[8.0 / 15.0, 0.0]).expect("valid"),
    )
    .expect("dcdc system is well formed")
}

/// Looks up a built-in system by name.
pub fn builtin(name: &str) -> Result<SystemSpec> {
    match name {
        "academic" => Ok(academic()),
        "dcdc" => Ok(dcdc()),
        other => Err(Error::InvalidInput(format!(
            "unknown built-in system {other:?} (expected \"academic\" or \"dcdc\")"
        ))),
    }
}
