//! Dirichlet problems on a uniform grid clipped by polylines.
//!
//! Nodes are classified by scanline parity against each boundary curve. A grid edge
//! from an unknown node to a fixed node is cut where it crosses the curve; its
//! conductance is `1/θ` for a crossing at fraction `θ` of the edge, which keeps the
//! discrete operator symmetric and places the boundary value at the true crossing.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry;

/// Cut fractions below this are clamped.
const MIN_FRACTION: f64 = 1e-3;
const MAX_CG_ITER: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellState {
    /// Fixed, inside the inner boundary.
    Inner,
    /// Fixed, outside the outer boundary.
    Outer,
    /// Unknown.
    Interior,
    /// Fixed, outside the domain of a one-boundary problem.
    Exterior,
}

/// A cut edge: neighbour direction, crossing fraction and boundary value there.
#[derive(Clone, Copy, Debug)]
struct Cut {
    theta: f64,
    value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HarmonicGrid {
    #[serde(with = "crate::points::one")]
    pub lo: C64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub state: Vec<CellState>,
    pub values: Vec<f64>,
    /// Relative residual reached by the solver.
    pub residual: f64,
    pub iterations: usize,
    #[serde(skip)]
    cuts: Vec<[Option<Cut>; 4]>,
}

/// Offsets of the four neighbours: +x, -x, +y, -y.
const DIRS: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// Per-row sorted crossings of a closed polyline with the grid rows.
fn row_crossings(curve: &[C64], lo: C64, h: f64, ny: usize) -> Vec<Vec<f64>> {
    let mut rows = vec![Vec::new(); ny];
    let n = curve.len();
    for i in 0..n {
        let (a, b) = (curve[i], curve[(i + 1) % n]);
        let (ya, yb) = ((a.im - lo.im) / h, (b.im - lo.im) / h);
        let (y0, y1) = (ya.min(yb), ya.max(yb));
        let first = y0.ceil().max(0.0) as isize;
        let last = y1.floor().min(ny as f64 - 1.0) as isize;
        for iy in first..=last {
            let iy = iy as usize;
            let y = iy as f64;
            // half-open rule: count the edge when exactly one end is strictly above
            if (ya > y) != (yb > y) {
                let t = (y - ya) / (yb - ya);
                rows[iy].push((a.re - lo.re) / h + t * (b.re - a.re) / h);
            }
        }
    }
    for r in &mut rows {
        r.sort_by(f64::total_cmp);
    }
    rows
}

/// Inside/outside of every node by crossing parity.
fn classify(curve: &[C64], lo: C64, h: f64, nx: usize, ny: usize) -> Vec<bool> {
    let rows = row_crossings(curve, lo, h, ny);
    let mut inside = vec![false; nx * ny];
    for (iy, xs) in rows.iter().enumerate() {
        let mut k = 0;
        let mut parity = false;
        for ix in 0..nx {
            let x = ix as f64;
            while k < xs.len() && xs[k] <= x {
                parity = !parity;
                k += 1;
            }
            inside[iy * nx + ix] = parity;
        }
    }
    inside
}

/// Edges of a closed polyline bucketed by grid cell.
struct SegmentBuckets<'a> {
    curve: &'a [C64],
    lo: C64,
    h: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl<'a> SegmentBuckets<'a> {
    fn new(curve: &'a [C64], lo: C64, h: f64, nx: usize, ny: usize) -> Self {
        let mut cells = vec![Vec::new(); nx * ny];
        let n = curve.len();
        let clamp = |v: f64, m: usize| (v.floor().max(0.0) as usize).min(m - 1);
        for i in 0..n {
            let (a, b) = (curve[i], curve[(i + 1) % n]);
            let x0 = clamp((a.re.min(b.re) - lo.re) / h, nx);
            let x1 = clamp((a.re.max(b.re) - lo.re) / h, nx);
            let y0 = clamp((a.im.min(b.im) - lo.im) / h, ny);
            let y1 = clamp((a.im.max(b.im) - lo.im) / h, ny);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    cells[y * nx + x].push(i as u32);
                }
            }
        }
        Self { curve, lo, h, nx, ny, cells }
    }

    /// Smallest fraction along `p -> q` (one grid edge) where the polyline crosses it.
    fn crossing(&self, p: C64, q: C64) -> Option<f64> {
        let n = self.curve.len();
        let m = 0.5 * (p + q);
        let cx = ((m.re - self.lo.re) / self.h).floor() as isize;
        let cy = ((m.im - self.lo.im) / self.h).floor() as isize;
        let mut best: Option<f64> = None;
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (x, y) = (cx + dx, cy + dy);
                if x < 0 || y < 0 || x >= self.nx as isize || y >= self.ny as isize {
                    continue;
                }
                for &i in &self.cells[y as usize * self.nx + x as usize] {
                    let i = i as usize;
                    let (a, b) = (self.curve[i], self.curve[(i + 1) % n]);
                    if let Some(t) = segment_hit(p, q, a, b) {
                        best = Some(best.map_or(t, |s: f64| s.min(t)));
                    }
                }
            }
        }
        best
    }
}

/// Parameter `t ∈ [0,1]` along `p -> q` of its intersection with segment `a -> b`.
fn segment_hit(p: C64, q: C64, a: C64, b: C64) -> Option<f64> {
    let r = q - p;
    let s = b - a;
    let denom = r.re * s.im - r.im * s.re;
    if denom == 0.0 {
        return None;
    }
    let d = a - p;
    let t = (d.re * s.im - d.im * s.re) / denom;
    let u = (d.re * r.im - d.im * r.re) / denom;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then_some(t)
}

/// A boundary curve, the state of nodes inside it, and its data.
pub(crate) struct Boundary<'a> {
    pub curve: &'a [C64],
    pub value: &'a dyn Fn(C64) -> f64,
}

impl HarmonicGrid {
    fn node(&self, ix: usize, iy: usize) -> C64 {
        self.lo + C64::new(ix as f64 * self.h, iy as f64 * self.h)
    }

    /// Grid over the box `[lo, hi]` with `resolution` nodes along the longer side.
    fn empty(lo: C64, hi: C64, resolution: usize) -> Self {
        let w = (hi.re - lo.re).max(hi.im - lo.im);
        let h = w / (resolution - 1) as f64;
        let pad = 2.0 * h;
        let lo = lo - C64::new(pad, pad);
        let nx = ((hi.re - lo.re + pad) / h).ceil() as usize + 1;
        let ny = ((hi.im - lo.im + pad) / h).ceil() as usize + 1;
        Self {
            lo,
            h,
            nx,
            ny,
            state: vec![CellState::Exterior; nx * ny],
            values: vec![0.0; nx * ny],
            residual: f64::INFINITY,
            iterations: 0,
            cuts: Vec::new(),
        }
    }

    /// Annulus between `inner` (u = 0) and `outer` (u = 1).
    pub(crate) fn annulus(outer: &[C64], inner: &[C64], resolution: usize) -> Self {
        let (lo, hi) = geometry::bounding_box(outer);
        let mut g = Self::empty(lo, hi, resolution);
        let in_outer = classify(outer, g.lo, g.h, g.nx, g.ny);
        let in_inner = classify(inner, g.lo, g.h, g.nx, g.ny);
        for i in 0..g.nx * g.ny {
            g.state[i] = if in_inner[i] {
                CellState::Inner
            } else if in_outer[i] {
                CellState::Interior
            } else {
                CellState::Outer
            };
            g.values[i] = if g.state[i] == CellState::Outer { 1.0 } else { 0.0 };
        }
        let zero = |_: C64| 0.0;
        let one = |_: C64| 1.0;
        g.cut_edges(&[
            (CellState::Inner, Boundary { curve: inner, value: &zero }),
            (CellState::Outer, Boundary { curve: outer, value: &one }),
        ]);
        g
    }

    /// Interior of `curve` with boundary data `value`.
    pub(crate) fn dirichlet(curve: &[C64], value: &dyn Fn(C64) -> f64, resolution: usize) -> Self {
        let (lo, hi) = geometry::bounding_box(curve);
        let mut g = Self::empty(lo, hi, resolution);
        let inside = classify(curve, g.lo, g.h, g.nx, g.ny);
        for i in 0..g.nx * g.ny {
            g.state[i] = if inside[i] { CellState::Interior } else { CellState::Exterior };
        }
        g.cut_edges(&[(CellState::Exterior, Boundary { curve, value })]);
        g
    }

    fn cut_edges(&mut self, boundaries: &[(CellState, Boundary<'_>)]) {
        let buckets: Vec<(CellState, SegmentBuckets<'_>, &dyn Fn(C64) -> f64)> = boundaries
            .iter()
            .map(|(s, b)| (*s, SegmentBuckets::new(b.curve, self.lo, self.h, self.nx, self.ny), b.value))
            .collect();
        let mut cuts = vec![[None; 4]; self.nx * self.ny];
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let i = iy * self.nx + ix;
                if self.state[i] != CellState::Interior {
                    continue;
                }
                for (d, (dx, dy)) in DIRS.iter().enumerate() {
                    let (jx, jy) = (ix as isize + dx, iy as isize + dy);
                    let fixed = if jx < 0 || jy < 0 || jx >= self.nx as isize || jy >= self.ny as isize {
                        None
                    } else {
                        let j = jy as usize * self.nx + jx as usize;
                        (self.state[j] != CellState::Interior).then_some(self.state[j])
                    };
                    let Some(kind) = fixed else {
                        if jx < 0 || jy < 0 || jx >= self.nx as isize || jy >= self.ny as isize {
                            // padding guarantees this does not happen for interior nodes
                            cuts[i][d] = Some(Cut { theta: 1.0, value: 0.0 });
                        }
                        continue;
                    };
                    let p = self.node(ix, iy);
                    let q = self.node(jx as usize, jy as usize);
                    let (theta, value) = buckets
                        .iter()
                        .find(|(s, _, _)| *s == kind)
                        .map(|(_, b, f)| {
                            let t = b.crossing(p, q).unwrap_or(1.0);
                            (t, f(p + (q - p) * t))
                        })
                        .unwrap_or((1.0, self.values[jy as usize * self.nx + jx as usize]));
                    cuts[i][d] = Some(Cut {
                        theta: theta.max(MIN_FRACTION),
                        value,
                    });
                }
            }
        }
        self.cuts = cuts;
    }

    /// Solve by Jacobi-preconditioned conjugate gradients to relative residual `tol`.
    pub(crate) fn solve(&mut self, tol: f64) -> Result<()> {
        let unknown: Vec<usize> = (0..self.nx * self.ny)
            .filter(|&i| self.state[i] == CellState::Interior)
            .collect();
        if unknown.is_empty() {
            return Err(Error::UnderResolved("no interior grid nodes".into()));
        }
        let mut index = vec![usize::MAX; self.nx * self.ny];
        for (k, &i) in unknown.iter().enumerate() {
            index[i] = k;
        }
        let m = unknown.len();
        // neighbours (unknown index) and diagonal / rhs from cuts
        let mut nbrs = vec![[usize::MAX; 4]; m];
        let mut diag = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for (k, &i) in unknown.iter().enumerate() {
            let (ix, iy) = (i % self.nx, i / self.nx);
            for (d, (dx, dy)) in DIRS.iter().enumerate() {
                if let Some(cut) = self.cuts[i][d] {
                    let c = 1.0 / cut.theta;
                    diag[k] += c;
                    rhs[k] += c * cut.value;
                } else {
                    let j = (iy as isize + dy) as usize * self.nx + (ix as isize + dx) as usize;
                    nbrs[k][d] = index[j];
                    diag[k] += 1.0;
                }
            }
        }
        let apply = |x: &[f64], y: &mut [f64]| {
            for k in 0..m {
                let mut s = diag[k] * x[k];
                for &j in &nbrs[k] {
                    if j != usize::MAX {
                        s -= x[j];
                    }
                }
                y[k] = s;
            }
        };
        let mut x: Vec<f64> = unknown.iter().map(|&i| self.values[i]).collect();
        let mut r = vec![0.0; m];
        apply(&x, &mut r);
        for k in 0..m {
            r[k] = rhs[k] - r[k];
        }
        let bnorm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let mut z: Vec<f64> = r.iter().zip(&diag).map(|(a, d)| a / d).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut ap = vec![0.0; m];
        let mut it = 0;
        let mut rel = r.iter().map(|v| v * v).sum::<f64>().sqrt() / bnorm;
        while rel > tol && it < MAX_CG_ITER {
            apply(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            let alpha = rz / pap;
            for k in 0..m {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            for k in 0..m {
                z[k] = r[k] / diag[k];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..m {
                p[k] = z[k] + beta * p[k];
            }
            rel = r.iter().map(|v| v * v).sum::<f64>().sqrt() / bnorm;
            it += 1;
        }
        for (k, &i) in unknown.iter().enumerate() {
            self.values[i] = x[k];
        }
        self.residual = rel;
        self.iterations = it;
        if rel > tol {
            return Err(Error::UnderResolved(format!(
                "conjugate gradients stopped at relative residual {rel:e} after {it} iterations"
            )));
        }
        Ok(())
    }

    /// Discrete Dirichlet energy of the solution.
    pub fn energy(&self) -> f64 {
        let mut e = 0.0;
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let i = iy * self.nx + ix;
                if self.state[i] != CellState::Interior {
                    continue;
                }
                let u = self.values[i];
                for (d, (dx, dy)) in DIRS.iter().enumerate() {
                    match self.cuts[i][d] {
                        Some(cut) => e += (u - cut.value).powi(2) / cut.theta,
                        // each interior edge once, from its lower-index end
                        None if d % 2 == 0 => {
                            let j = (iy as isize + dy) as usize * self.nx + (ix as isize + dx) as usize;
                            e += (u - self.values[j]).powi(2);
                        }
                        None => {}
                    }
                }
            }
        }
        e
    }

    /// Bilinear interpolation at `z`; all four surrounding nodes must be unknowns.
    pub fn interpolate(&self, z: C64) -> Result<f64> {
        let fx = (z.re - self.lo.re) / self.h;
        let fy = (z.im - self.lo.im) / self.h;
        let (ix, iy) = (fx.floor(), fy.floor());
        if ix < 0.0 || iy < 0.0 || ix as usize + 1 >= self.nx || iy as usize + 1 >= self.ny {
            return Err(Error::Precondition(format!("{z} is outside the grid")));
        }
        let (ix, iy) = (ix as usize, iy as usize);
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let at = |x: usize, y: usize| -> Result<f64> {
            let i = y * self.nx + x;
            if self.state[i] != CellState::Interior {
                return Err(Error::UnderResolved(format!("{z} is within a grid cell of the boundary")));
            }
            Ok(self.values[i])
        };
        Ok((1.0 - tx) * (1.0 - ty) * at(ix, iy)?
            + tx * (1.0 - ty) * at(ix + 1, iy)?
            + (1.0 - tx) * ty * at(ix, iy + 1)?
            + tx * ty * at(ix + 1, iy + 1)?)
    }

    /// Largest violation of `min(data) <= u <= max(data)` over unknowns.
    pub fn maximum_principle_violation(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in self.cuts.iter().flatten().flatten() {
            lo = lo.min(c.value);
            hi = hi.max(c.value);
        }
        self.values
            .iter()
            .zip(&self.state)
            .filter(|(_, s)| **s == CellState::Interior)
            .map(|(v, _)| (lo - v).max(v - hi).max(0.0))
            .fold(0.0, f64::max)
    }
}
