//! Gauss–Legendre rules and the panel splitting shared by quadrature and the
//! fixed-step integrators.

use serde::{Deserialize, Serialize};

/// Number of geometric refinement levels placed next to a declared singular point.
pub const GRADED_LEVELS: i32 = 40;

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `k`-point rule by Newton iteration on the Legendre polynomial.
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; k];
        let mut weights = vec![0.0; k];
        let kf = k as f64;
        for i in 0..k.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (kf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(k, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(k, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[k - 1 - i] = x;
            weights[i] = w;
            weights[k - 1 - i] = w;
        }
        if k % 2 == 1 {
            nodes[k / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

fn legendre_with_derivative(k: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=k {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    if k == 0 {
        return (1.0, 0.0);
    }
    let d = k as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre settings: every panel is cut into `substeps` equal
/// pieces, each integrated with a `nodes`-point rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub substeps: usize,
    pub nodes: usize,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self {
            substeps: 4,
            nodes: 5,
        }
    }
}

impl QuadratureRule {
    /// Quadrature points and weights over the given panels. Graded panels get
    /// twice the nodes: the integrand there varies on the scale of the panel.
    pub fn points(&self, panels: &[Panel]) -> Vec<(f64, f64)> {
        let gl = GaussLegendre::new(self.nodes);
        let fine = GaussLegendre::new(2 * self.nodes);
        let mut out = Vec::with_capacity(panels.len() * self.substeps * self.nodes);
        for p in panels {
            let gl = if p.graded { &fine } else { &gl };
            let h = p.width() / self.substeps as f64;
            for j in 0..self.substeps {
                let a = p.lo + j as f64 * h;
                let b = if j + 1 == self.substeps { p.hi } else { a + h };
                out.extend(gl.on(a, b));
            }
        }
        out
    }
}

/// A closed sub-interval on which the integrand is free of declared breakpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub lo: f64,
    pub hi: f64,
    /// True when the panel belongs to a geometric refinement toward a singular point.
    pub graded: bool,
}

impl Panel {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Splits [a, b] at every cut strictly inside it, then grades the pieces that
/// touch (or sit next to) a singular point: edges accumulate geometrically with
/// ratio 4 toward the singularity.
pub fn split_panels(a: f64, b: f64, cuts: &[f64], singular: &[f64]) -> Vec<Panel> {
    if b <= a {
        return Vec::new();
    }
    let mut edges = vec![a];
    let mut inner: Vec<f64> = cuts
        .iter()
        .chain(singular)
        .copied()
        .filter(|&c| c > a && c < b)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    edges.extend(inner);
    edges.push(b);

    let mut panels = Vec::new();
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let left = singular.iter().copied().filter(|&c| c <= lo).fold(f64::NEG_INFINITY, f64::max);
        let right = singular.iter().copied().filter(|&c| c >= hi).fold(f64::INFINITY, f64::min);
        let width = hi - lo;
        let near_left = lo - left < width;
        let near_right = right - hi < width;
        if near_left && (!near_right || lo - left <= right - hi) {
            panels.extend(graded_from_left(lo, hi, left));
        } else if near_right {
            let mut mirrored: Vec<Panel> = graded_from_left(-hi, -lo, -right)
                .into_iter()
                .map(|p| Panel {
                    lo: -p.hi,
                    hi: -p.lo,
                    graded: true,
                })
                .collect();
            mirrored.reverse();
            panels.extend(mirrored);
        } else {
            panels.push(Panel {
                lo,
                hi,
                graded: false,
            });
        }
    }
    panels
}

// Edges between lo and hi accumulating toward the singular point c <= lo.
fn graded_from_left(lo: f64, hi: f64, c: f64) -> Vec<Panel> {
    let mut edges = Vec::new();
    if c == lo {
        edges.push(lo);
        for k in (1..=GRADED_LEVELS).rev() {
            edges.push(lo + (hi - lo) * 4f64.powi(-k));
        }
    } else {
        edges.push(lo);
        let mut e = c + (lo - c) * 4.0;
        while e < hi {
            edges.push(e);
            e = c + (e - c) * 4.0;
        }
    }
    edges.push(hi);
    edges.dedup();
    edges
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| Panel {
            lo: w[0],
            hi: w[1],
            graded: true,
        })
        .collect()
}

/// Sorted, deduplicated union of the given times, keeping those strictly inside (lo, hi).
pub fn interior_times(lo: f64, hi: f64, times: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = times.into_iter().filter(|&t| t > lo && t < hi).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}
