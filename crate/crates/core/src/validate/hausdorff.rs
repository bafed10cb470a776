//! Hausdorff distance estimates between convex sets and between finite unions.

use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::setkernel::{direction_grid, Zonotope};

/// `max_d |h₁(d) − h₂(d)|` over `directions` unit vectors.
///
/// For convex compact sets this is a lower bound on the Hausdorff distance that
/// converges to it as the grid is refined; in two dimensions the grid is the
/// uniform angle grid of [`direction_grid`].
pub fn hausdorff_convex(z1: &Zonotope, z2: &Zonotope, directions: usize) -> Result<f64> {
    check_dim("hausdorff_convex", z1.dim(), z2.dim())?;
    if directions == 0 {
        return Err(Error::InvalidInput("need at least one direction".into()));
    }
    Ok(direction_grid(z1.dim(), directions)
        .par_iter()
        .map(|d| (z1.support_unchecked(d) - z2.support_unchecked(d)).abs())
        .reduce(|| 0.0, f64::max))
}

/// Symmetric Hausdorff distance between the point clouds formed by the
/// `samples_per_set`-direction outlines of every set in each tube.
///
/// The union of convex pieces is non-convex, so this samples boundaries
/// instead of comparing support functions; it estimates the distance between
/// the two unions.
pub fn hausdorff_tube(a: &[Zonotope], b: &[Zonotope], samples_per_set: usize) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("hausdorff_tube needs non-empty tubes".into()));
    }
    let ca = outline_cloud(a, samples_per_set)?;
    let cb = outline_cloud(b, samples_per_set)?;
    Ok(point_cloud_hausdorff(&ca, &cb))
}

pub fn outline_cloud(sets: &[Zonotope], samples_per_set: usize) -> Result<Vec<[f64; 2]>> {
    let per_set: Vec<Vec<[f64; 2]>> = sets
        .par_iter()
        .map(|z| {
            Ok(z.outline_2d(samples_per_set)?
                .into_iter()
                .map(|p| [p[0], p[1]])
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_set.into_iter().flatten().collect())
}

/// Symmetric Hausdorff distance between two finite planar point sets.
pub fn point_cloud_hausdorff(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let ia = GridIndex::new(a);
    let ib = GridIndex::new(b);
    let ab = a.par_iter().map(|p| ib.nearest_sq(p)).reduce(|| 0.0, f64::max);
    let ba = b.par_iter().map(|p| ia.nearest_sq(p)).reduce(|| 0.0, f64::max);
    ab.max(ba).sqrt()
}

/// Uniform bucket grid for nearest-neighbour queries.
struct GridIndex<'a> {
    pts: &'a [[f64; 2]],
    origin: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    // CSR layout: bucket k owns order[start[k]..start[k + 1]].
    start: Vec<usize>,
    order: Vec<usize>,
}

impl<'a> GridIndex<'a> {
    fn new(pts: &'a [[f64; 2]]) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in pts {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let (w, h) = ((hi[0] - lo[0]).max(0.0), (hi[1] - lo[1]).max(0.0));
        let n = pts.len().max(1) as f64;
        let mut cell = (w * h / n).sqrt() * 2.0;
        if !(cell > 0.0) {
            cell = w.max(h) / n.sqrt();
        }
        if !(cell > 0.0) {
            cell = 1.0;
        }
        let nx = ((w / cell).floor() as usize + 1).min(4096);
        let ny = ((h / cell).floor() as usize + 1).min(4096);
        let cell = cell.max(w / nx as f64).max(h / ny as f64);

        let mut counts = vec![0usize; nx * ny + 1];
        let key = |p: &[f64; 2]| -> usize {
            let ix = (((p[0] - lo[0]) / cell) as usize).min(nx - 1);
            let iy = (((p[1] - lo[1]) / cell) as usize).min(ny - 1);
            iy * nx + ix
        };
        for p in pts {
            counts[key(p) + 1] += 1;
        }
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        let mut fill = counts.clone();
        let mut order = vec![0usize; pts.len()];
        for (i, p) in pts.iter().enumerate() {
            let k = key(p);
            order[fill[k]] = i;
            fill[k] += 1;
        }
        Self {
            pts,
            origin: lo,
            cell,
            nx,
            ny,
            start: counts,
            order,
        }
    }

    fn nearest_sq(&self, q: &[f64; 2]) -> f64 {
        if self.pts.is_empty() {
            return f64::INFINITY;
        }
        let fx = ((q[0] - self.origin[0]) / self.cell).floor();
        let fy = ((q[1] - self.origin[1]) / self.cell).floor();
        let cx = fx.clamp(0.0, (self.nx - 1) as f64) as i64;
        let cy = fy.clamp(0.0, (self.ny - 1) as f64) as i64;
        // Distance from q to the clamped cell, for the ring lower bound.
        let clamp_gap = {
            let bx = self.origin[0] + cx as f64 * self.cell;
            let by = self.origin[1] + cy as f64 * self.cell;
            let dx = (bx - q[0]).max(q[0] - (bx + self.cell)).max(0.0);
            let dy = (by - q[1]).max(q[1] - (by + self.cell)).max(0.0);
            (dx * dx + dy * dy).sqrt()
        };
        let mut best = f64::INFINITY;
        let max_ring = self.nx.max(self.ny) as i64;
        for r in 0..=max_ring {
            for iy in (cy - r)..=(cy + r) {
                if iy < 0 || iy >= self.ny as i64 {
                    continue;
                }
                let on_edge_row = iy == cy - r || iy == cy + r;
                let step = if on_edge_row { 1 } else { (2 * r).max(1) };
                let mut ix = cx - r;
                while ix <= cx + r {
                    if ix >= 0 && ix < self.nx as i64 {
                        let k = iy as usize * self.nx + ix as usize;
                        for &i in &self.order[self.start[k]..self.start[k + 1]] {
                            let p = self.pts[i];
                            let d = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                            if d < best {
                                best = d;
                            }
                        }
                    }
                    ix += step;
                }
            }
            let reach = r as f64 * self.cell - clamp_gap;
            if reach > 0.0 && best <= reach * reach {
                break;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vector;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
        let directed = |x: &[[f64; 2]], y: &[[f64; 2]]| {
            x.iter()
                .map(|p| {
                    y.iter()
                        .map(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        };
        directed(a, b).max(directed(b, a))
    }

    #[test]
    fn identical_sets_are_at_distance_zero() {
        let z = Zonotope::unit_box(2);
        assert_eq!(hausdorff_convex(&z, &z, 720).unwrap(), 0.0);
        assert_eq!(hausdorff_tube(std::slice::from_ref(&z), std::slice::from_ref(&z), 64).unwrap(), 0.0);
    }

    #[test]
    fn translated_square() {
        let z = Zonotope::unit_box(2);
        let t = z.translate(&Vector::from_vec(vec![0.3, 0.0])).unwrap();
        assert_relative_eq!(hausdorff_convex(&z, &t, 4).unwrap(), 0.3, epsilon = 1e-15);
        assert_relative_eq!(hausdorff_convex(&z, &t, 720).unwrap(), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn scaled_square() {
        let small = Zonotope::unit_box(2);
        let big = Zonotope::from_box(&[-2.0, -2.0], &[2.0, 2.0]).unwrap();
        let d = hausdorff_convex(&small, &big, 360).unwrap();
        assert!((d - 2f64.sqrt()).abs() <= 0.005 * 2f64.sqrt(), "{d}");
    }

    #[test]
    fn dimension_mismatch() {
        assert!(hausdorff_convex(&Zonotope::unit_box(2), &Zonotope::unit_box(3), 10).is_err());
        assert!(hausdorff_tube(&[], &[Zonotope::unit_box(2)], 10).is_err());
    }

    #[test]
    fn single_set_tube_agrees_with_support_estimate() {
        let a = Zonotope::new(
            Vector::from_vec(vec![0.0, 0.0]),
            vec![Vector::from_vec(vec![1.0, 0.2]), Vector::from_vec(vec![-0.3, 0.8])],
        )
        .unwrap();
        let b = a.linear_map(&(crate::linalg::Matrix::identity(2, 2) * 1.3)).unwrap();
        let samples = 256;
        let convex = hausdorff_convex(&a, &b, 720).unwrap();
        let sampled = hausdorff_tube(&[a], std::slice::from_ref(&b), samples).unwrap();
        let diam = 2.0 * b.norm_estimate(720);
        assert!((convex - sampled).abs() <= diam * std::f64::consts::PI / samples as f64);
    }

    #[test]
    fn grid_index_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let na = rng.random_range(1..300);
            let nb = rng.random_range(1..300);
            let spread = if trial % 3 == 0 { 1e-6 } else { 10.0 };
            let mut cloud = |n: usize, shift: f64| -> Vec<[f64; 2]> {
                (0..n)
                    .map(|_| {
                        [
                            rng.random_range(-spread..spread) + shift,
                            rng.random_range(-1.0..1.0) * spread,
                        ]
                    })
                    .collect()
            };
            let a = cloud(na, 0.0);
            let b = cloud(nb, if trial % 2 == 0 { 5.0 } else { 0.0 });
            assert_relative_eq!(point_cloud_hausdorff(&a, &b), brute(&a, &b), max_relative = 1e-12);
        }
    }

    #[test]
    fn degenerate_clouds() {
        let a = [[1.0, 1.0]; 5];
        let b = [[1.0, 1.0], [4.0, 5.0]];
        assert_relative_eq!(point_cloud_hausdorff(&a, &b), 5.0);
    }

    #[test]
    fn tube_with_one_moved_set_matches_brute_force() {
        let tube: Vec<Zonotope> = (0..4)
            .map(|k| {
                Zonotope::unit_box(2)
                    .translate(&Vector::from_vec(vec![k as f64 * 1.5, 0.0]))
                    .unwrap()
            })
            .collect();
        let mut moved = tube.clone();
        let delta = 0.4;
        moved[3] = moved[3].translate(&Vector::from_vec(vec![0.0, delta])).unwrap();
        let d = hausdorff_tube(&tube, &moved, 64).unwrap();
        let ca = outline_cloud(&tube, 64).unwrap();
        let cb = outline_cloud(&moved, 64).unwrap();
        assert_relative_eq!(d, brute(&ca, &cb), max_relative = 1e-12);
        assert!(d > 0.0 && d <= delta + 1e-12);
    }
}
