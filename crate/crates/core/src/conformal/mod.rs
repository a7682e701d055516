//! Conformal invariants of polygonal domains: modulus of annuli, capacity at a point
//! and at infinity, the Grötzsch deficit, Hausdorff distance, and the reference Julia
//! set of `z^2 - 1`.
//!
//! Every grid quantity is computed at two resolutions and reported with its
//! Richardson extrapolation.

mod grid;
mod julia;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use grid::{CellState, HarmonicGrid};
pub use julia::{basin_boundary, reference_julia, ReferenceJulia};

use crate::error::{Error, Result};
use crate::geometry::{self, PolylineIndex};

pub const DEFAULT_RESOLUTION: usize = 256;
pub const DEFAULT_SOLVER_TOL: f64 = 1e-8;
/// Convergence order assumed by the extrapolation.
const RICHARDSON_ORDER: f64 = 2.0;

/// Vertices closer than this fraction of the outer diameter are merged before solving.
/// Traced boundaries cluster heavily near ray landings; the merge moves the curve by
/// far less than a grid spacing.
const THIN_FRACTION: f64 = 1e-5;

/// Fewest grid nodes the inner boundary must enclose.
const MIN_INNER_NODES: usize = 16;

/// Annulus between two closed polylines, `inner` strictly inside `outer`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSpec {
    #[serde(with = "crate::points::vec")]
    pub outer: Vec<C64>,
    #[serde(with = "crate::points::vec")]
    pub inner: Vec<C64>,
}

impl AnnulusSpec {
    pub fn new(outer: Vec<C64>, inner: Vec<C64>) -> Result<Self> {
        if outer.len() < 3 || inner.len() < 3 {
            return Err(Error::Precondition("annulus boundaries need at least 3 vertices".into()));
        }
        let d = geometry::diameter(&outer);
        let outer = geometry::thin(&outer, THIN_FRACTION * d);
        let inner = geometry::thin(&inner, THIN_FRACTION * d);
        let band = 1e-12 * d;
        let gap = geometry::polyline_separation(&outer, &inner);
        if gap <= band {
            return Err(Error::Nesting(format!("annulus boundaries touch (separation {gap:e})")));
        }
        // disjoint connected curves: one inner vertex decides containment
        if geometry::winding_number(&outer, inner[0], band)? == 0 {
            return Err(Error::Nesting(format!(
                "inner boundary point {} is not inside the outer boundary",
                inner[0]
            )));
        }
        Ok(Self { outer, inner })
    }

    /// Concentric circles `r1 < r2` about `center`, `n` vertices each.
    pub fn round(center: C64, r1: f64, r2: f64, n: usize) -> Result<Self> {
        Self::new(circle(center, r2, n), circle(center, r1, n))
    }

    /// Image under `z ↦ λz + b`.
    pub fn affine(&self, lambda: C64, b: C64) -> Result<Self> {
        let f = |v: &Vec<C64>| v.iter().map(|z| lambda * z + b).collect::<Vec<_>>();
        Self::new(f(&self.outer), f(&self.inner))
    }
}

/// `n` counterclockwise vertices of a circle.
pub fn circle(center: C64, r: f64, n: usize) -> Vec<C64> {
    (0..n)
        .map(|k| center + C64::from_polar(r, std::f64::consts::TAU * k as f64 / n as f64))
        .collect()
}

/// A grid measurement at `resolution` and at half of it, with the extrapolated value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub resolution: usize,
    pub value: f64,
    pub coarse: f64,
    pub richardson: f64,
    /// Largest relative solver residual of the two solves.
    pub residual: f64,
}

impl Estimate {
    fn from_pair(resolution: usize, fine: (f64, f64), coarse: (f64, f64)) -> Self {
        let k = RICHARDSON_ORDER.exp2() - 1.0;
        Self {
            resolution,
            value: fine.0,
            coarse: coarse.0,
            richardson: fine.0 + (fine.0 - coarse.0) / k,
            residual: fine.1.max(coarse.1),
        }
    }

    /// `|value - coarse|`, the resolution sensitivity.
    pub fn change(&self) -> f64 {
        (self.value - self.coarse).abs()
    }
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < 64 {
        return Err(Error::Precondition(format!("resolution {resolution} is below 64")));
    }
    Ok(())
}

fn grid_spacing(curve: &[C64], resolution: usize) -> f64 {
    let (lo, hi) = geometry::bounding_box(curve);
    (hi.re - lo.re).max(hi.im - lo.im) / (resolution - 1) as f64
}

fn under_resolved(gap: f64, h: f64, resolution: usize, what: &str) -> Error {
    let needed = (resolution as f64 * 3.0 * h / gap).ceil() as usize + 1;
    Error::UnderResolved(format!(
        "{what} is {gap:e}, below 3 grid spacings ({h:e}); use resolution >= {needed}"
    ))
}

fn modulus_once(annulus: &AnnulusSpec, resolution: usize, tol: f64) -> Result<(f64, f64)> {
    let h = grid_spacing(&annulus.outer, resolution);
    let gap = geometry::polyline_separation(&annulus.outer, &annulus.inner);
    if gap < 3.0 * h {
        return Err(under_resolved(gap, h, resolution, "the distance between the annulus boundaries"));
    }
    let mut g = HarmonicGrid::annulus(&annulus.outer, &annulus.inner, resolution);
    let held = g.state.iter().filter(|&&s| s == CellState::Inner).count();
    if held < MIN_INNER_NODES {
        return Err(Error::UnderResolved(format!(
            "only {held} grid nodes inside the inner boundary at resolution {resolution}"
        )));
    }
    g.solve(tol)?;
    Ok((std::f64::consts::TAU / g.energy(), g.residual))
}

/// Modulus `log(r2/r1)`-normalized: `2π / energy` of the harmonic measure of the outer
/// boundary, at `resolution` nodes across the outer bounding box and at half of that.
pub fn modulus(annulus: &AnnulusSpec, resolution: usize, solver_tol: f64) -> Result<Estimate> {
    check_resolution(resolution)?;
    let fine = modulus_once(annulus, resolution, solver_tol)?;
    let coarse = modulus_once(annulus, resolution / 2, solver_tol)?;
    Ok(Estimate::from_pair(resolution, fine, coarse))
}

/// [`modulus`] at `start` resolution, doubled until the fine and coarse values agree
/// within `target_change` or `max_resolution` is reached. Under-resolved grids below
/// the cap are retried at the next resolution. The last estimate is returned either
/// way; callers read the achieved agreement from [`Estimate::change`].
pub fn modulus_adaptive(
    annulus: &AnnulusSpec,
    start: usize,
    max_resolution: usize,
    target_change: f64,
    solver_tol: f64,
) -> Result<Estimate> {
    let mut r = start;
    loop {
        let last = 2 * r > max_resolution;
        match modulus(annulus, r, solver_tol) {
            Ok(e) if last || e.change() <= target_change => return Ok(e),
            Err(Error::UnderResolved(msg)) if last => return Err(Error::UnderResolved(msg)),
            Ok(_) | Err(Error::UnderResolved(_)) => r *= 2,
            Err(e) => return Err(e),
        }
    }
}

/// Where the capacity is taken.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pole {
    Point(#[serde(with = "crate::points::one")] C64),
    Infinity,
}

fn capacity_at_point_once(boundary: &[C64], at: C64, resolution: usize, tol: f64) -> Result<(f64, f64)> {
    let h = grid_spacing(boundary, resolution);
    let d = PolylineIndex::new(boundary).distance(at);
    if d < 3.0 * h {
        return Err(under_resolved(d, h, resolution, "the distance from the pole to the boundary"));
    }
    // cap = h(at) with h harmonic and h = log|w - at| on the boundary
    let data = move |w: C64| (w - at).norm().ln();
    let mut g = HarmonicGrid::dirichlet(boundary, &data, resolution);
    g.solve(tol)?;
    Ok((g.interpolate(at)?, g.residual))
}

/// A point well inside the curve: the best of a coarse sample grid by distance to the
/// boundary.
fn deep_point(boundary: &[C64]) -> Result<(C64, f64)> {
    let (lo, hi) = geometry::bounding_box(boundary);
    let index = PolylineIndex::new(boundary);
    let band = 1e-12 * geometry::diameter(boundary);
    let mut best: Option<(C64, f64)> = None;
    let k = 48;
    for i in 1..k {
        for j in 1..k {
            let z = C64::new(
                lo.re + (hi.re - lo.re) * i as f64 / k as f64,
                lo.im + (hi.im - lo.im) * j as f64 / k as f64,
            );
            if geometry::winding_number(boundary, z, band).map(|w| w != 0).unwrap_or(false) {
                let d = index.distance(z);
                if best.map_or(true, |b| d > b.1) {
                    best = Some((z, d));
                }
            }
        }
    }
    best.ok_or_else(|| Error::Precondition("boundary encloses no sample point".into()))
}

/// Inversion `w = 1/(z - z0)` of a closed polyline, densified so that inverted edges
/// are at most `step`.
fn invert(boundary: &[C64], z0: C64, step: f64) -> Vec<C64> {
    let n = boundary.len();
    let mut out = Vec::new();
    for i in 0..n {
        let (a, b) = (boundary[i] - z0, boundary[(i + 1) % n] - z0);
        let chord = (a - b).norm() / (a.norm() * b.norm());
        let k = (chord / step).ceil().max(1.0) as usize;
        for j in 0..k {
            let z = a + (b - a) * (j as f64 / k as f64);
            out.push(1.0 / z);
        }
    }
    out
}

fn capacity_at_infinity_once(boundary: &[C64], resolution: usize, tol: f64) -> Result<(f64, f64)> {
    // the exterior maps onto the interior of the inverted curve with ∞ -> 0, and the
    // Green's function constant carries over: cap_∞(U) = cap_0(1/(U - z0))
    let (z0, d) = deep_point(boundary)?;
    let diam_inv = 2.0 / d;
    let step = diam_inv / (4.0 * resolution as f64);
    let inv = invert(boundary, z0, step);
    capacity_at_point_once(&inv, C64::new(0.0, 0.0), resolution, tol)
}

/// Capacity of the domain bounded by `boundary`: at a point inside, the constant term of
/// the Green's function `G(w) + log|w - at|`; at infinity, the constant of the exterior
/// Green's function with the sign convention `cap_∞ = -log(radius)` for a round disc.
pub fn capacity(boundary: &[C64], at: Pole, resolution: usize, solver_tol: f64) -> Result<Estimate> {
    check_resolution(resolution)?;
    let thinned = geometry::thin(boundary, THIN_FRACTION * geometry::diameter(boundary));
    let boundary = thinned.as_slice();
    let once = |r: usize| match at {
        Pole::Point(p) => {
            let band = 1e-12 * geometry::diameter(boundary);
            if geometry::winding_number(boundary, p, band)? == 0 {
                return Err(Error::Precondition(format!("pole {p} is not inside the boundary")));
            }
            capacity_at_point_once(boundary, p, r, solver_tol)
        }
        Pole::Infinity => capacity_at_infinity_once(boundary, r, solver_tol),
    };
    let fine = once(resolution)?;
    let coarse = once(resolution / 2)?;
    Ok(Estimate::from_pair(resolution, fine, coarse))
}

/// `mod(outer \ inner) - mod(outer \ middle) - mod(middle \ inner)` from extrapolated
/// moduli; non-negative up to discretization error.
pub fn grotzsch_deficit(
    outer: &[C64],
    middle: &[C64],
    inner: &[C64],
    resolution: usize,
    solver_tol: f64,
) -> Result<f64> {
    let whole = AnnulusSpec::new(outer.to_vec(), inner.to_vec())?;
    let a = AnnulusSpec::new(outer.to_vec(), middle.to_vec())?;
    let b = AnnulusSpec::new(middle.to_vec(), inner.to_vec())?;
    let m = |s: &AnnulusSpec| modulus(s, resolution, solver_tol).map(|e| e.richardson);
    Ok(m(&whole)? - m(&a)? - m(&b)?)
}

/// `cap_∞` of the filled Julia set of `z^2 + c` from the escape-time Green's function:
/// `-(log|z| - G(z))` averaged over a circle of radius `radius`. Vanishes for monic
/// polynomials.
pub fn julia_capacity_at_infinity(c: C64, radius: f64) -> Result<f64> {
    let map = crate::quaddyn::QuadraticMap { c };
    let k = 16;
    let mut s = 0.0;
    for j in 0..k {
        let z = C64::from_polar(radius, std::f64::consts::TAU * (j as f64 + 0.5) / k as f64);
        let g = crate::quaddyn::green_value(&map, z, 4096, 1e10)?;
        s += z.norm().ln() - g;
    }
    Ok(-s / k as f64)
}

/// Uniform-grid bucketing of a point set for nearest-neighbour distances.
struct PointIndex<'a> {
    points: &'a [C64],
    lo: C64,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl<'a> PointIndex<'a> {
    fn new(points: &'a [C64]) -> Self {
        let (lo, hi) = geometry::bounding_box(points);
        let side = ((points.len() as f64).sqrt().ceil() as usize).max(1);
        let w = (hi.re - lo.re).max(hi.im - lo.im).max(f64::MIN_POSITIVE);
        let cell = w / side as f64;
        let nx = ((hi.re - lo.re) / cell).floor() as usize + 1;
        let ny = ((hi.im - lo.im) / cell).floor() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for (i, p) in points.iter().enumerate() {
            let x = (((p.re - lo.re) / cell) as usize).min(nx - 1);
            let y = (((p.im - lo.im) / cell) as usize).min(ny - 1);
            buckets[y * nx + x].push(i as u32);
        }
        Self { points, lo, cell, nx, ny, buckets }
    }

    fn nearest(&self, p: C64) -> f64 {
        let fx = ((p.re - self.lo.re) / self.cell).floor();
        let fy = ((p.im - self.lo.im) / self.cell).floor();
        let cx = fx.clamp(0.0, (self.nx - 1) as f64) as usize;
        let cy = fy.clamp(0.0, (self.ny - 1) as f64) as usize;
        let mut best = f64::INFINITY;
        let rings = self.nx.max(self.ny);
        for k in 0..=rings {
            geometry::for_ring(cx, cy, k, self.nx, self.ny, |x, y| {
                for &i in &self.buckets[y * self.nx + x] {
                    best = best.min((self.points[i as usize] - p).norm());
                }
            });
            // unvisited cells are at least k cells away
            if best <= k as f64 * self.cell {
                break;
            }
        }
        best
    }
}

/// Hausdorff distance between two finite point sets.
pub fn hausdorff(a: &[C64], b: &[C64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let ia = PointIndex::new(a);
    let ib = PointIndex::new(b);
    let ab = a.iter().map(|&p| ib.nearest(p)).fold(0.0, f64::max);
    let ba = b.iter().map(|&p| ia.nearest(p)).fold(0.0, f64::max);
    Ok(ab.max(ba))
}

#[cfg(test)]
mod tests {
    use super::*;

    const Z0: C64 = C64::new(0.0, 0.0);

    #[test]
    fn round_annuli() {
        let a = AnnulusSpec::round(Z0, 1.0, 2.0, 1024).unwrap();
        let m = modulus(&a, 128, DEFAULT_SOLVER_TOL).unwrap();
        assert!((m.richardson / 2f64.ln() - 1.0).abs() < 0.01);
        let e = AnnulusSpec::round(Z0, 1.0, std::f64::consts::E, 1024).unwrap();
        let m = modulus(&e, 128, DEFAULT_SOLVER_TOL).unwrap();
        assert!((m.richardson - 1.0).abs() < 0.01);
        // second-order convergence makes the extrapolation closer than either solve
        assert!((m.richardson - 1.0).abs() < (m.value - 1.0).abs());
    }

    #[test]
    fn adaptive_modulus_refines_small_inner_boundaries() {
        // 4 nodes across the inner disc at 64: too few to hold it
        let a = AnnulusSpec::round(Z0, 0.05, 1.0, 1024).unwrap();
        assert!(matches!(modulus(&a, 64, DEFAULT_SOLVER_TOL), Err(Error::UnderResolved(_))));
        let m = modulus_adaptive(&a, 64, 512, 1e-2, DEFAULT_SOLVER_TOL).unwrap();
        assert!(m.resolution > 64);
        assert!((m.richardson - 20f64.ln()).abs() < 0.02);
    }

    #[test]
    fn harmonic_grid_obeys_maximum_principle() {
        let a = AnnulusSpec::round(C64::new(0.2, 0.0), 0.3, 1.0, 512).unwrap();
        let mut g = HarmonicGrid::annulus(&a.outer, &a.inner, 96);
        g.solve(1e-10).unwrap();
        assert!(g.residual < 1e-10);
        assert_eq!(g.maximum_principle_violation(), 0.0);
    }

    #[test]
    fn under_resolved_annulus_prescribes_a_finer_grid() {
        let a = AnnulusSpec::round(Z0, 1.0, 1.02, 512).unwrap();
        match modulus(&a, 64, DEFAULT_SOLVER_TOL) {
            Err(Error::UnderResolved(msg)) => assert!(msg.contains("resolution >=")),
            other => panic!("expected an under-resolved error, got {other:?}"),
        }
        assert!(modulus(&a, 32, DEFAULT_SOLVER_TOL).is_err());
    }

    #[test]
    fn nesting_is_checked() {
        let err = AnnulusSpec::new(circle(Z0, 1.0, 64), circle(C64::new(3.0, 0.0), 0.5, 64));
        assert!(matches!(err, Err(Error::Nesting(_))));
    }

    #[test]
    fn capacities_of_discs() {
        let unit = capacity(&circle(Z0, 1.0, 2048), Pole::Point(Z0), 128, DEFAULT_SOLVER_TOL).unwrap();
        assert!(unit.richardson.abs() < 0.01);
        let half = capacity(&circle(Z0, 0.5, 2048), Pole::Point(Z0), 128, DEFAULT_SOLVER_TOL).unwrap();
        assert!((half.richardson - 0.5f64.ln()).abs() < 0.01);
        // oracle: conformal radius of a disc at an off-center point, (ρ² - |a|²)/ρ
        let a = C64::new(0.1, 0.05);
        let off = capacity(&circle(Z0, 0.5, 2048), Pole::Point(a), 128, DEFAULT_SOLVER_TOL).unwrap();
        assert!((off.richardson - ((0.25 - a.norm_sqr()) / 0.5).ln()).abs() < 1e-4);
        let inf = capacity(&circle(C64::new(0.3, -0.2), 0.5, 2048), Pole::Infinity, 128, DEFAULT_SOLVER_TOL).unwrap();
        assert!((inf.richardson + 0.5f64.ln()).abs() < 0.01);
    }

    #[test]
    fn capacity_translation_and_scale_laws() {
        let shape: Vec<C64> = (0..1024)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / 1024.0;
                C64::from_polar(1.0 + 0.2 * (3.0 * t).cos(), t)
            })
            .collect();
        let at = C64::new(0.1, 0.1);
        let base = capacity(&shape, Pole::Point(at), 128, DEFAULT_SOLVER_TOL).unwrap().richardson;
        let b = C64::new(-2.0, 5.0);
        let moved: Vec<C64> = shape.iter().map(|z| z + b).collect();
        let t = capacity(&moved, Pole::Point(at + b), 128, DEFAULT_SOLVER_TOL).unwrap().richardson;
        assert!((t - base).abs() < 1e-4);
        let lam = C64::new(0.6, 1.1);
        let scaled: Vec<C64> = shape.iter().map(|z| z * lam).collect();
        let s = capacity(&scaled, Pole::Point(at * lam), 128, DEFAULT_SOLVER_TOL).unwrap().richardson;
        assert!((s - base - lam.norm().ln()).abs() < 1e-3);
    }

    #[test]
    fn capacity_is_stable_under_small_perturbations() {
        let bumpy = |d: f64| -> Vec<C64> {
            (0..1024)
                .map(|k| {
                    let t = std::f64::consts::TAU * k as f64 / 1024.0;
                    C64::from_polar(1.0 + d * (5.0 * t).sin(), t)
                })
                .collect()
        };
        let c0 = capacity(&bumpy(0.0), Pole::Point(Z0), 128, DEFAULT_SOLVER_TOL).unwrap().richardson;
        let d1 = (capacity(&bumpy(0.02), Pole::Point(Z0), 128, DEFAULT_SOLVER_TOL).unwrap().richardson - c0).abs();
        let d2 = (capacity(&bumpy(0.04), Pole::Point(Z0), 128, DEFAULT_SOLVER_TOL).unwrap().richardson - c0).abs();
        assert!(d1 < 0.02 && d2 < 0.04);
        assert!(d2 > d1);
    }

    #[test]
    fn basin_capacity_is_log_half() {
        let b = basin_boundary(2e-3).unwrap();
        let cap = capacity(&b, Pole::Point(Z0), 256, DEFAULT_SOLVER_TOL).unwrap();
        assert!((cap.richardson - 0.5f64.ln()).abs() < 0.02);
    }

    #[test]
    fn grotzsch_deficits() {
        let c = |r| circle(Z0, r, 1024);
        let d = grotzsch_deficit(&c(4.0), &c(2.0), &c(1.0), 128, DEFAULT_SOLVER_TOL).unwrap();
        assert!(d.abs() < 0.02 * 4f64.ln());
        let off = grotzsch_deficit(&c(4.0), &circle(C64::new(1.2, 0.0), 1.8, 1024), &c(0.5), 256, DEFAULT_SOLVER_TOL).unwrap();
        assert!(off > 0.0);
    }

    #[test]
    fn grotzsch_deficit_around_the_basilica_tends_to_log_two() {
        // mod(D_R \ D_ε) - mod(D_R \ K) - mod(U_0 \ D_ε) with mod(D_R \ K) = ln R + cap_∞(K)
        let b = basin_boundary(2e-3).unwrap();
        let cap_inf = julia_capacity_at_infinity(C64::new(-1.0, 0.0), 1e3).unwrap();
        assert!(cap_inf.abs() < 1e-5);
        let mut last = f64::NAN;
        for eps in [0.1, 0.05] {
            let r = 10.0;
            let whole = (r / eps as f64).ln();
            let inner = AnnulusSpec::new(b.clone(), circle(Z0, eps, 512)).unwrap();
            let m_in = modulus(&inner, 256, DEFAULT_SOLVER_TOL).unwrap().richardson;
            last = whole - (r.ln() + cap_inf) - m_in;
        }
        assert!((last - 2f64.ln()).abs() < 0.05);
    }

    #[test]
    fn hausdorff_examples() {
        let a = circle(Z0, 1.0, 2000);
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        let b = circle(Z0, 2.0, 2000);
        let d = hausdorff(&a, &b).unwrap();
        assert!((d - 1.0).abs() < 2.0 * std::f64::consts::TAU / 2000.0);
        assert!(matches!(hausdorff(&a, &[]), Err(Error::EmptySet)));
    }
}
