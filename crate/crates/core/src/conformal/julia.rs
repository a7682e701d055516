//! The Julia set of `z^2 - 1` as an inverse-iteration point cloud, and the boundary
//! of its Fatou component containing 0.

use std::collections::{HashSet, VecDeque};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry;
use crate::puzzle::pull_back_curve;
use crate::quaddyn::QuadraticMap;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceJulia {
    #[serde(with = "crate::points::vec")]
    pub points: Vec<C64>,
    /// `J ⊂ D(0, outer_radius)`.
    pub outer_radius: f64,
    /// `D(0, inner_radius)` lies in the Fatou component of 0.
    pub inner_radius: f64,
    /// Side of the deduplication cells; the sampling resolution.
    pub cell: f64,
}

fn golden() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

/// Breadth-first preimage tree of the β fixed point, keeping one point per cell of side
/// `cell`; returns every kept point once the tree adds no new cells.
fn preimage_cloud(cell: f64, cap: usize) -> Vec<C64> {
    let key = |z: C64| ((z.re / cell).floor() as i64, (z.im / cell).floor() as i64);
    let beta = C64::new(golden(), 0.0);
    let mut seen = HashSet::new();
    let mut out = vec![beta];
    seen.insert(key(beta));
    let mut queue = VecDeque::from([beta]);
    while let Some(z) = queue.pop_front() {
        let r = (z + 1.0).sqrt();
        for w in [r, -r] {
            if seen.insert(key(w)) {
                out.push(w);
                queue.push_back(w);
                if out.len() >= cap {
                    return out;
                }
            }
        }
    }
    out
}

/// At least `samples` points of `J(z^2 - 1)`, grid-deduplicated, with bounding radii.
pub fn reference_julia(samples: usize) -> Result<ReferenceJulia> {
    if samples < 1000 {
        return Err(Error::Precondition(format!("need at least 1000 samples, got {samples}")));
    }
    let mut cell = 0.05;
    let points = loop {
        let pts = preimage_cloud(cell, 64 * samples);
        if pts.len() >= samples {
            break pts;
        }
        cell /= 2.0;
    };
    let outer_radius = points.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let inner_radius = points.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    Ok(ReferenceJulia {
        points,
        outer_radius,
        inner_radius,
        cell,
    })
}

/// Whether the orbit of `z` under `z^2 - 1` falls into the 2-cycle `{0, -1}` within
/// `max_iter` steps.
#[cfg(test)]
pub(crate) fn in_cycle_basin(z: C64, max_iter: u32) -> bool {
    let mut w = z;
    for _ in 0..max_iter {
        if w.norm() < 1e-3 || (w + 1.0).norm() < 1e-3 {
            return true;
        }
        if w.norm() > 4.0 {
            return false;
        }
        w = w * w - 1.0;
    }
    false
}

/// Boundary of the Fatou component of 0 as a counterclockwise polyline with spacing
/// about `h`: a small circle about 0 pulled back under `f^2` until it converges.
pub fn basin_boundary(h: f64) -> Result<Vec<C64>> {
    if !(h > 0.0 && h < 0.1) {
        return Err(Error::Precondition(format!("spacing {h} must lie in (0, 0.1)")));
    }
    let map = QuadraticMap::real(-1.0)?;
    let mut curve = crate::conformal::circle(C64::new(0.0, 0.0), 0.25, 64);
    for _ in 0..48 {
        // around 0, pulled back to a curve about -1, then doubly back about 0
        let (about_minus_one, _) = pull_back_curve(&map, &curve, h, C64::new(-1.0, 0.0))?;
        let (about_zero, double) = pull_back_curve(&map, &about_minus_one, h, C64::new(0.0, 0.0))?;
        if !double {
            return Err(Error::Combinatorics("pullback about 0 is not a double cover".into()));
        }
        curve = resample(&about_zero, h);
    }
    if geometry::signed_area(&curve) < 0.0 {
        curve.reverse();
    }
    Ok(curve)
}

/// Drop vertices closer than `h/2` to the last kept one.
fn resample(curve: &[C64], h: f64) -> Vec<C64> {
    let mut out = vec![curve[0]];
    for &z in &curve[1..] {
        if (z - *out.last().expect("non-empty")).norm() >= 0.5 * h {
            out.push(z);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PolylineIndex;

    #[test]
    fn cloud_contains_beta_and_avoids_the_inner_disc() {
        let j = reference_julia(2000).unwrap();
        assert!(j.points.len() >= 2000);
        assert_eq!(j.points[0], C64::new(golden(), 0.0));
        // β is fixed
        let b = j.points[0];
        assert!((b * b - 1.0 - b).norm() < 1e-15);
        assert!(j.points.iter().all(|z| z.norm() >= j.inner_radius && z.norm() <= j.outer_radius));
        // no sample falls into the 0 <-> -1 cycle quickly
        assert!(j.points.iter().all(|&z| !in_cycle_basin(z, 12)));
    }

    #[test]
    fn cloud_reaches_the_basin_boundary() {
        let j = reference_julia(4000).unwrap();
        let b = basin_boundary(1e-3).unwrap();
        let index = PolylineIndex::new(&b);
        let near = j.points.iter().filter(|&&z| index.distance(z) < 1e-3).count();
        assert!(near > 100);
        // basin boundary points are not in the basin interior: they need many steps
        assert!(b.iter().step_by(50).all(|&z| !in_cycle_basin(z, 6)));
        assert!(in_cycle_basin(C64::new(0.3, 0.0), 50));
    }

    #[test]
    fn cloud_is_symmetric() {
        let j = reference_julia(3000).unwrap();
        let neg: Vec<C64> = j.points.iter().map(|z| -z).collect();
        let d = crate::conformal::hausdorff(&j.points, &neg).unwrap();
        assert!(d < 0.05);
    }
}
