//! Closed-polyline helpers shared by pieces, parapieces and the grid solvers.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Integer winding number of a closed polyline about `about`.
///
/// The polyline is implicitly closed (last vertex joins the first).
pub fn winding_number(curve: &[C64], about: C64, tol: f64) -> Result<i64> {
    if curve.len() < 3 {
        return Err(Error::Precondition("a closed curve needs at least 3 vertices".into()));
    }
    let d = distance_to_polyline(curve, about);
    if d <= tol {
        return Err(Error::NearPassage {
            point: about,
            distance: d,
        });
    }
    let mut total = 0.0;
    let n = curve.len();
    for i in 0..n {
        let a = curve[i] - about;
        let b = curve[(i + 1) % n] - about;
        total += (b / a).arg();
    }
    Ok((total / TAU).round() as i64)
}

/// Crossing-number containment with no boundary band. Cheap; used in bulk tests.
pub fn contains(curve: &[C64], p: C64) -> bool {
    let n = curve.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (curve[i], curve[j]);
        if (a.im > p.im) != (b.im > p.im) {
            let x = a.re + (p.im - a.im) * (b.re - a.re) / (b.im - a.im);
            if p.re < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn signed_area(curve: &[C64]) -> f64 {
    let n = curve.len();
    (0..n)
        .map(|i| {
            let a = curve[i];
            let b = curve[(i + 1) % n];
            a.re * b.im - b.re * a.im
        })
        .sum::<f64>()
        / 2.0
}

pub fn bounding_box(points: &[C64]) -> (C64, C64) {
    let mut lo = C64::new(f64::INFINITY, f64::INFINITY);
    let mut hi = C64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.re = lo.re.min(p.re);
        lo.im = lo.im.min(p.im);
        hi.re = hi.re.max(p.re);
        hi.im = hi.im.max(p.im);
    }
    (lo, hi)
}

/// Diameter estimate: diagonal of the bounding box.
pub fn diameter(points: &[C64]) -> f64 {
    let (lo, hi) = bounding_box(points);
    (hi - lo).norm()
}

pub fn segment_distance(p: C64, a: C64, b: C64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).re * ab.re + (p - a).im * ab.im) / len2;
    let t = t.clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

pub fn distance_to_polyline(curve: &[C64], p: C64) -> f64 {
    let n = curve.len();
    (0..n)
        .map(|i| segment_distance(p, curve[i], curve[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// Minimum distance between two polylines, via vertex-to-segment distances.
pub fn polyline_separation(a: &[C64], b: &[C64]) -> f64 {
    let ia = PolylineIndex::new(a);
    let ib = PolylineIndex::new(b);
    let ab = a.iter().map(|&p| ib.distance(p)).fold(f64::INFINITY, f64::min);
    let ba = b.iter().map(|&p| ia.distance(p)).fold(f64::INFINITY, f64::min);
    ab.min(ba)
}

/// Uniform-grid bucketing of the edges of a closed polyline for distance queries.
pub struct PolylineIndex<'a> {
    curve: &'a [C64],
    lo: C64,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl<'a> PolylineIndex<'a> {
    pub fn new(curve: &'a [C64]) -> Self {
        let n = curve.len();
        let (lo, hi) = bounding_box(curve);
        let side = ((n as f64).sqrt().ceil() as usize).max(1);
        let w = (hi.re - lo.re).max(hi.im - lo.im).max(f64::MIN_POSITIVE);
        let cell = w / side as f64;
        let nx = (((hi.re - lo.re) / cell).floor() as usize + 1).min(side + 1);
        let ny = (((hi.im - lo.im) / cell).floor() as usize + 1).min(side + 1);
        let mut idx = Self {
            curve,
            lo,
            cell,
            nx,
            ny,
            buckets: vec![Vec::new(); nx * ny],
        };
        for i in 0..n {
            let (a, b) = (curve[i], curve[(i + 1) % n]);
            let (x0, y0) = idx.cell_of(C64::new(a.re.min(b.re), a.im.min(b.im)));
            let (x1, y1) = idx.cell_of(C64::new(a.re.max(b.re), a.im.max(b.im)));
            for x in x0..=x1 {
                for y in y0..=y1 {
                    idx.buckets[y * nx + x].push(i as u32);
                }
            }
        }
        idx
    }

    fn cell_of(&self, p: C64) -> (usize, usize) {
        let fx = ((p.re - self.lo.re) / self.cell).floor().max(0.0) as usize;
        let fy = ((p.im - self.lo.im) / self.cell).floor().max(0.0) as usize;
        (fx.min(self.nx - 1), fy.min(self.ny - 1))
    }

    /// Distance from `p` to the polyline.
    pub fn distance(&self, p: C64) -> f64 {
        let n = self.curve.len();
        if n == 0 {
            return f64::INFINITY;
        }
        let (cx, cy) = self.cell_of(p);
        let mut best = f64::INFINITY;
        let rings = self.nx.max(self.ny);
        for k in 0..=rings {
            for_ring(cx, cy, k, self.nx, self.ny, |x, y| {
                for &i in &self.buckets[y * self.nx + x] {
                    let i = i as usize;
                    let d = segment_distance(p, self.curve[i], self.curve[(i + 1) % n]);
                    best = best.min(d);
                }
            });
            if best <= k as f64 * self.cell {
                break;
            }
        }
        best
    }
}

/// Visit the cells at Chebyshev distance exactly `k` from `(cx, cy)` inside an
/// `nx × ny` grid.
pub(crate) fn for_ring(cx: usize, cy: usize, k: usize, nx: usize, ny: usize, mut visit: impl FnMut(usize, usize)) {
    let (cx, cy, k) = (cx as isize, cy as isize, k as isize);
    let inside = |x: isize, y: isize| x >= 0 && y >= 0 && x < nx as isize && y < ny as isize;
    if k == 0 {
        if inside(cx, cy) {
            visit(cx as usize, cy as usize);
        }
        return;
    }
    for x in (cx - k)..=(cx + k) {
        for y in [cy - k, cy + k] {
            if inside(x, y) {
                visit(x as usize, y as usize);
            }
        }
    }
    for y in (cy - k + 1)..=(cy + k - 1) {
        for x in [cx - k, cx + k] {
            if inside(x, y) {
                visit(x as usize, y as usize);
            }
        }
    }
}

pub fn max_gap(curve: &[C64]) -> f64 {
    let n = curve.len();
    (0..n)
        .map(|i| (curve[(i + 1) % n] - curve[i]).norm())
        .fold(0.0, f64::max)
}

/// Linear subdivision of a closed polyline so no edge exceeds `h`.
pub fn densify(curve: &[C64], h: f64) -> Vec<C64> {
    let n = curve.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let a = curve[i];
        let b = curve[(i + 1) % n];
        let k = ((b - a).norm() / h).ceil().max(1.0) as usize;
        for j in 0..k {
            out.push(a + (b - a) * (j as f64 / k as f64));
        }
    }
    out
}

/// Keep only vertices at least `eps` from the previously kept one. The result stays
/// within `eps` of the original curve.
pub fn thin(curve: &[C64], eps: f64) -> Vec<C64> {
    let mut out: Vec<C64> = Vec::with_capacity(curve.len());
    for &z in curve {
        match out.last() {
            Some(&last) if (z - last).norm() < eps => {}
            _ => out.push(z),
        }
    }
    while out.len() > 3 && (out[0] - out[out.len() - 1]).norm() < eps {
        out.pop();
    }
    out
}

/// Drop consecutive duplicates (closing vertex included).
pub fn dedup_closed(curve: &mut Vec<C64>, eps: f64) {
    curve.dedup_by(|b, a| (*b - *a).norm() <= eps);
    while curve.len() > 1 && (curve[0] - curve[curve.len() - 1]).norm() <= eps {
        curve.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(r: f64, n: usize) -> Vec<C64> {
        (0..n)
            .map(|k| C64::from_polar(r, TAU * k as f64 / n as f64))
            .collect()
    }

    #[test]
    fn winding_examples() {
        let c = circle(1.0, 64);
        assert_eq!(winding_number(&c, C64::new(0.0, 0.0), 1e-9).unwrap(), 1);
        assert_eq!(winding_number(&c, C64::new(3.0, 0.0), 1e-9).unwrap(), 0);
        let rev: Vec<C64> = c.iter().rev().copied().collect();
        assert_eq!(winding_number(&rev, C64::new(0.1, 0.0), 1e-9).unwrap(), -1);
        assert!(matches!(
            winding_number(&c, C64::new(1.0, 0.0), 1e-9),
            Err(Error::NearPassage { .. })
        ));
    }

    #[test]
    fn area_and_containment() {
        let c = circle(2.0, 512);
        assert!((signed_area(&c) - 4.0 * std::f64::consts::PI).abs() < 1e-3);
        assert!(contains(&c, C64::new(1.9, 0.0)));
        assert!(!contains(&c, C64::new(2.1, 0.0)));
    }

    #[test]
    fn densify_bounds_gaps() {
        let c = circle(1.0, 8);
        let d = densify(&c, 0.05);
        assert!(max_gap(&d) <= 0.05 + 1e-12);
        let sep = polyline_separation(&circle(1.0, 256), &circle(2.0, 256));
        assert!((sep - 1.0).abs() < 1e-3);
    }
}
