//! Zonotopes and the exact set algebra used by the reachability recursion.
//!
//! A zonotope is `{ c + Σⱼ ξⱼ gⱼ : ξⱼ ∈ [-1, 1] }`. The class is closed under
//! linear maps and Minkowski sums, so propagating sets through the recursion
//! involves no approximation at all. Generators are never merged or pruned:
//! the position of a generator in the list is the index of its coefficient,
//! which is what witness extraction relies on.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{Matrix, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct Zonotope {
    center: Vector,
    generators: Vec<Vector>,
}

/// JSON form `{"center": [...], "generators": [[...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonotopeJson {
    pub center: Vec<f64>,
    #[serde(default)]
    pub generators: Vec<Vec<f64>>,
}

impl Zonotope {
    pub fn new(center: Vector, generators: Vec<Vector>) -> Result<Self> {
        if center.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("zonotope center has non-finite entries".into()));
        }
        for (j, g) in generators.iter().enumerate() {
            check_dim("zonotope generator", center.len(), g.len())?;
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "zonotope generator {j} has non-finite entries"
                )));
            }
        }
        Ok(Self { center, generators })
    }

    pub fn singleton(point: Vector) -> Result<Self> {
        Self::new(point, Vec::new())
    }

    /// Axis-aligned box `[lo₁,hi₁] × … × [loₙ,hiₙ]`; degenerate axes get no generator.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        check_dim("box bounds", lo.len(), hi.len())?;
        let d = lo.len();
        let mut center = Vector::zeros(d);
        let mut generators = Vec::new();
        for k in 0..d {
            if !(lo[k] <= hi[k]) {
                return Err(Error::InvalidInput(format!(
                    "box bound {k}: lower {} exceeds upper {}",
                    lo[k], hi[k]
                )));
            }
            center[k] = 0.5 * (lo[k] + hi[k]);
            let r = 0.5 * (hi[k] - lo[k]);
            if r > 0.0 {
                let mut g = Vector::zeros(d);
                g[k] = r;
                generators.push(g);
            }
        }
        Self::new(center, generators)
    }

    /// The box `[-1, 1]^d`.
    pub fn unit_box(d: usize) -> Self {
        Self::from_box(&vec![-1.0; d], &vec![1.0; d]).expect("unit box is valid")
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn generators(&self) -> &[Vector] {
        &self.generators
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    /// `{ M x : x ∈ Z }`.
    pub fn linear_map(&self, m: &Matrix) -> Result<Self> {
        check_dim("linear_map", m.ncols(), self.dim())?;
        Ok(Self {
            center: m * &self.center,
            generators: self.generators.iter().map(|g| m * g).collect(),
        })
    }

    /// `Z1 + Z2`: centers add, generator lists concatenate (self's first).
    pub fn minkowski_sum(&self, other: &Zonotope) -> Result<Self> {
        check_dim("minkowski_sum", self.dim(), other.dim())?;
        let mut generators = Vec::with_capacity(self.num_generators() + other.num_generators());
        generators.extend(self.generators.iter().cloned());
        generators.extend(other.generators.iter().cloned());
        Ok(Self {
            center: &self.center + &other.center,
            generators,
        })
    }

    pub fn translate(&self, v: &Vector) -> Result<Self> {
        check_dim("translate", self.dim(), v.len())?;
        Ok(Self {
            center: &self.center + v,
            generators: self.generators.clone(),
        })
    }

    /// Support function `h_Z(d) = d·c + Σⱼ |d·gⱼ|`.
    pub fn support(&self, d: &Vector) -> Result<f64> {
        check_dim("support", self.dim(), d.len())?;
        Ok(self.support_unchecked(d))
    }

    pub(crate) fn support_unchecked(&self, d: &Vector) -> f64 {
        d.dot(&self.center) + self.generators.iter().map(|g| d.dot(g).abs()).sum::<f64>()
    }

    /// A point of `Z` attaining `h_Z(d)`; ties `d·g = 0` take the `+g` side.
    pub fn support_point(&self, d: &Vector) -> Result<Vector> {
        check_dim("support_point", self.dim(), d.len())?;
        Ok(self.support_point_unchecked(d))
    }

    pub(crate) fn support_point_unchecked(&self, d: &Vector) -> Vector {
        let mut p = self.center.clone();
        for g in &self.generators {
            if d.dot(g) >= 0.0 {
                p += g;
            } else {
                p -= g;
            }
        }
        p
    }

    /// `c + Σⱼ ξⱼ gⱼ` for coefficients in [-1, 1].
    pub fn point_from_coefficients(&self, xi: &[f64]) -> Result<Vector> {
        check_dim("point_from_coefficients", self.num_generators(), xi.len())?;
        if let Some((j, v)) = xi
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.abs() <= 1.0))
        {
            return Err(Error::InvalidInput(format!(
                "coefficient {j} = {v} outside [-1, 1]"
            )));
        }
        let mut p = self.center.clone();
        for (g, &x) in self.generators.iter().zip(xi) {
            p.axpy(x, g, 1.0);
        }
        Ok(p)
    }

    /// Polygon inscribed in a planar zonotope: support points on `directions`
    /// uniformly spaced unit vectors, in counter-clockwise angular order.
    pub fn outline_2d(&self, directions: usize) -> Result<Vec<Vector>> {
        if self.dim() != 2 {
            return Err(Error::InvalidInput(format!(
                "outline_2d needs a planar zonotope, got dimension {}",
                self.dim()
            )));
        }
        if directions < 3 {
            return Err(Error::InvalidInput(format!(
                "outline_2d needs at least 3 directions, got {directions}"
            )));
        }
        Ok(direction_grid(2, directions)
            .iter()
            .map(|d| self.support_point_unchecked(d))
            .collect())
    }

    /// Lower estimate of `‖Z‖ = max_{x∈Z} ‖x‖₂` as the largest support value over a
    /// direction grid (exact in one dimension).
    pub fn norm_estimate(&self, directions: usize) -> f64 {
        direction_grid(self.dim(), directions)
            .iter()
            .map(|d| self.support_unchecked(d))
            .fold(self.center.norm(), f64::max)
    }

    pub fn to_json(&self) -> ZonotopeJson {
        ZonotopeJson {
            center: self.center.iter().copied().collect(),
            generators: self
                .generators
                .iter()
                .map(|g| g.iter().copied().collect())
                .collect(),
        }
    }

    pub fn from_json(z: &ZonotopeJson) -> Result<Self> {
        Self::new(
            Vector::from_column_slice(&z.center),
            z.generators
                .iter()
                .map(|g| Vector::from_column_slice(g))
                .collect(),
        )
    }
}

impl Serialize for Zonotope {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Zonotope {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let z = ZonotopeJson::deserialize(d)?;
        Zonotope::from_json(&z).map_err(serde::de::Error::custom)
    }
}

/// Deterministic unit directions.
///
/// One dimension: `±1`. Two dimensions: angles `2πk/count`, which contain the
/// four axis directions whenever `count` is a multiple of 4 and are nested under
/// doubling. Higher dimensions: the `±eⱼ` axes followed by seeded uniform
/// directions on the sphere.
pub fn direction_grid(dim: usize, count: usize) -> Vec<Vector> {
    match dim {
        0 => Vec::new(),
        1 => vec![Vector::from_element(1, 1.0), Vector::from_element(1, -1.0)],
        2 => (0..count)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / count as f64;
                Vector::from_vec(vec![a.cos(), a.sin()])
            })
            .collect(),
        _ => {
            let mut out = Vec::with_capacity(count.max(2 * dim));
            for j in 0..dim {
                for s in [1.0, -1.0] {
                    let mut e = Vector::zeros(dim);
                    e[j] = s;
                    out.push(e);
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(0x005e_edd1);
            while out.len() < count {
                let v = Vector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
                let n = v.norm();
                if n > 1e-3 && n <= 1.0 {
                    out.push(v / n);
                }
            }
            out
        }
    }
}
