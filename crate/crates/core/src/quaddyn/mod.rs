//! Dynamical-plane primitives for `f_c(z) = z^2 + c`: iteration, Green's function,
//! fixed points, external rays and equipotentials.
//!
//! Rays and equipotentials are computed by Newton's method on `f^k(z) = T`, where
//! `T = exp(2^k (g + 2πiθ))` is the Böttcher-coordinate target pushed out until
//! `2^k g` exceeds [`Profile::big_potential`]. At that size the Böttcher map differs
//! from the identity by `O(|c| / |T|^2)`, far below double precision.

mod angle;
mod deep;

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub(crate) use angle::cmp_fraction;
pub use angle::{AnglePoint, ExternalAngle};
pub(crate) use deep::{deep_equipotential, deep_landing, landed_ray, DIRECT_FLOOR};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Numerical knobs shared by every tracer and solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    /// Potential steps per halving of the Green's value while tracing rays.
    pub steps_per_halving: u32,
    /// Newton iteration cap per step.
    pub newton_max_iter: u32,
    /// Recursive step bisections allowed before a stall is reported.
    pub max_bisections: u32,
    /// Potential (of the periodic image of a ray) below which landing refinement runs.
    pub landing_threshold: f64,
    /// Escape-time iteration cap for Green's values.
    pub max_iter: u32,
    /// `2^k g` is pushed at least this high before Newton on `f^k`.
    pub big_potential: f64,
    /// Radius past which an escaping orbit is considered converged for `log|z|/2^n`.
    pub green_bailout: f64,
}

impl Default for Profile {
    fn default() -> Self {
        Self {
            steps_per_halving: 8,
            newton_max_iter: 30,
            max_bisections: 12,
            landing_threshold: 1e-7,
            max_iter: 4096,
            big_potential: 16.0,
            green_bailout: 1e10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticMap {
    pub c: C64,
}

impl QuadraticMap {
    pub fn new(c: C64) -> Result<Self> {
        if !c.re.is_finite() || !c.im.is_finite() {
            return Err(Error::Domain(format!("parameter {c} is not finite")));
        }
        Ok(Self { c })
    }

    pub fn real(c: f64) -> Result<Self> {
        Self::new(C64::new(c, 0.0))
    }

    #[inline]
    pub fn forward(&self, z: C64) -> C64 {
        z * z + self.c
    }

    pub fn iterate(&self, z: C64, n: usize) -> C64 {
        (0..n).fold(z, |w, _| self.forward(w))
    }

    /// The two preimages `±sqrt(w - c)`, principal branch first.
    pub fn preimages(&self, w: C64) -> [C64; 2] {
        let r = (w - self.c).sqrt();
        [r, -r]
    }

    /// `f^n(z)` and its derivative in `z`.
    pub fn iterate_with_derivative(&self, z: C64, n: usize) -> (C64, C64) {
        let mut z = z;
        let mut d = C64::new(1.0, 0.0);
        for _ in 0..n {
            d = 2.0 * z * d;
            z = z * z + self.c;
        }
        (z, d)
    }

    /// Critical orbit `f^0(0), ..., f^n(0)`.
    pub fn critical_orbit(&self, n: usize) -> Vec<C64> {
        let mut out = Vec::with_capacity(n + 1);
        let mut z = C64::new(0.0, 0.0);
        out.push(z);
        for _ in 0..n {
            z = self.forward(z);
            out.push(z);
        }
        out
    }

    pub fn default_escape_radius(&self) -> f64 {
        (2.0 + self.c.norm()).max(4.0)
    }
}

/// Green's function `lim log|f^n(z)| / 2^n`, 0 when the orbit stays below the escape
/// radius for `max_iter` steps. After escape the orbit is followed to
/// `profile.green_bailout` so the returned value is converged to double precision.
pub fn green_value(map: &QuadraticMap, z: C64, max_iter: u32, escape_radius: f64) -> Result<f64> {
    green_value_with(map, z, max_iter, escape_radius, Profile::default().green_bailout)
}

pub fn green_value_with(
    map: &QuadraticMap,
    z: C64,
    max_iter: u32,
    escape_radius: f64,
    bailout: f64,
) -> Result<f64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain(format!("point {z} is not finite")));
    }
    if max_iter < 1 {
        return Err(Error::Precondition("max_iter must be at least 1".into()));
    }
    if escape_radius < 2.0 + map.c.norm() - 1e-12 {
        return Err(Error::Precondition(format!(
            "escape radius {escape_radius} below 2 + |c|"
        )));
    }
    let r2 = escape_radius * escape_radius;
    let mut w = z;
    let mut n = 0u32;
    while w.norm_sqr() <= r2 {
        if n >= max_iter {
            return Ok(0.0);
        }
        w = map.forward(w);
        n += 1;
    }
    let b2 = bailout.max(escape_radius) * bailout.max(escape_radius);
    while w.norm_sqr() < b2 {
        w = map.forward(w);
        n += 1;
    }
    Ok(0.5 * w.norm_sqr().ln() / (n as f64).exp2())
}

/// Green's value with the default iteration cap and escape radius.
pub fn potential(map: &QuadraticMap, z: C64) -> f64 {
    let p = Profile::default();
    green_value(map, z, p.max_iter, map.default_escape_radius()).unwrap_or(f64::NAN)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPoints {
    pub alpha: C64,
    pub beta: C64,
    /// Set when the two fixed points coincide (`c = 1/4`).
    pub degenerate: bool,
}

pub fn fixed_points(map: &QuadraticMap) -> FixedPoints {
    let s = (C64::new(1.0, 0.0) - 4.0 * map.c).sqrt();
    let beta = (1.0 + s) / 2.0;
    let alpha = (1.0 - s) / 2.0;
    FixedPoints {
        alpha,
        beta,
        degenerate: s.norm() < 1e-12,
    }
}

/// A traced external ray: points ordered by strictly decreasing potential.
#[derive(Clone, Debug, PartialEq)]
pub struct RayTrace {
    pub angle: ExternalAngle,
    pub points: Vec<C64>,
    pub potentials: Vec<f64>,
    pub landing_estimate: Option<C64>,
}

impl RayTrace {
    pub fn max_step(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .fold(0.0, f64::max)
    }

    pub fn last(&self) -> C64 {
        *self.points.last().expect("ray traces are never empty")
    }

    /// Seed for a Newton solve at potential `g`: the traced point with the smallest
    /// potential not below `g`.
    pub fn seed_for(&self, g: f64) -> Option<C64> {
        let idx = self.potentials.partition_point(|&p| p >= g);
        if idx == 0 {
            None
        } else {
            Some(self.points[idx - 1])
        }
    }
}

/// Newton iterations for `f^k(z) = exp(2^k (g + 2πiθ))` from `seed`.
pub fn boettcher_newton(
    map: &QuadraticMap,
    angle: &AnglePoint,
    g: f64,
    seed: C64,
    profile: &Profile,
) -> Option<C64> {
    let k = doubling_depth(g, profile.big_potential);
    let target = boettcher_target(angle, g, k);
    newton_on_iterate(map, k, target, seed, profile.newton_max_iter)
}

pub(crate) fn doubling_depth(g: f64, big: f64) -> u32 {
    if g >= big {
        0
    } else {
        (big / g).log2().ceil().max(0.0) as u32
    }
}

pub(crate) fn boettcher_target(angle: &AnglePoint, g: f64, k: u32) -> C64 {
    let phase = angle.doubled_frac(k);
    let modulus = (g * (k as f64).exp2()).exp();
    C64::from_polar(modulus, TAU * phase)
}

fn newton_on_iterate(map: &QuadraticMap, k: u32, target: C64, seed: C64, cap: u32) -> Option<C64> {
    let mut z = seed;
    let mut prev = f64::INFINITY;
    for _ in 0..cap {
        let (w, d) = map.iterate_with_derivative(z, k as usize);
        let dz = (w - target) / d;
        if !dz.re.is_finite() || !dz.im.is_finite() {
            return None;
        }
        z -= dz;
        let scale = z.norm().max(1e-30);
        if dz.norm() <= 1e-14 * scale {
            return Some(z);
        }
        // rounding noise in f^k can stall the step above the strict tolerance; accept
        // once the image matches the target closely and steps stop shrinking
        if dz.norm() >= 0.5 * prev && (w - target).norm() <= 1e-6 * target.norm() {
            return Some(z);
        }
        prev = dz.norm();
    }
    None
}

/// Continuation down a ray at an arbitrary angle position.
pub(crate) struct RayStepper<'a> {
    map: &'a QuadraticMap,
    angle: AnglePoint,
    profile: &'a Profile,
    pub z: C64,
    pub g: f64,
}

impl<'a> RayStepper<'a> {
    pub fn new(map: &'a QuadraticMap, angle: AnglePoint, profile: &'a Profile) -> Self {
        let g = profile.big_potential;
        let w = C64::from_polar(g.exp(), TAU * angle.to_f64());
        // Φ^{-1}(w) = w - c/(2w) + O(w^-3)
        let z = w - map.c / (2.0 * w);
        let z = boettcher_newton(map, &angle, g, z, profile).unwrap_or(z);
        Self {
            map,
            angle,
            profile,
            z,
            g,
        }
    }

    /// Resume from a known point `z` on the ray at potential `g`.
    pub fn at(map: &'a QuadraticMap, angle: AnglePoint, profile: &'a Profile, z: C64, g: f64) -> Self {
        Self {
            map,
            angle,
            profile,
            z,
            g,
        }
    }

    /// Move to potential `g_next < self.g`, bisecting in log-potential on stalls.
    pub fn step_to(&mut self, g_next: f64) -> Result<()> {
        self.step_rec(g_next, self.profile.max_bisections)
    }

    fn step_rec(&mut self, g_next: f64, budget: u32) -> Result<()> {
        if let Some(z) = boettcher_newton(self.map, &self.angle, g_next, self.z, self.profile) {
            self.z = z;
            self.g = g_next;
            return Ok(());
        }
        if budget == 0 {
            return Err(Error::RayStall {
                angle: format!("{:?}", self.angle),
                deepest_potential: self.g,
            });
        }
        let mid = (self.g * g_next).sqrt();
        self.step_rec(mid, budget - 1)?;
        self.step_rec(g_next, budget - 1)
    }

    /// Descend to `g_end`, calling `visit` at each regular step.
    pub fn descend(&mut self, g_end: f64, mut visit: impl FnMut(C64, f64)) -> Result<()> {
        let ratio = (-1.0 / self.profile.steps_per_halving as f64).exp2();
        while self.g > g_end {
            let next = (self.g * ratio).max(g_end);
            let next = if next < g_end * (1.0 + 1e-12) { g_end } else { next };
            self.step_to(next)?;
            visit(self.z, self.g);
        }
        Ok(())
    }
}

/// Point on the ray of angle `angle` at potential `g`, traced down from large potential.
pub fn ray_point(map: &QuadraticMap, angle: AnglePoint, g: f64, profile: &Profile) -> Result<C64> {
    if !(g > 0.0) {
        return Err(Error::Precondition("potential must be positive".into()));
    }
    if g < DIRECT_FLOOR {
        return deep::deep_ray_point(map, angle, g, profile);
    }
    let mut s = RayStepper::new(map, angle, profile);
    if g >= s.g {
        let w = C64::from_polar(g.exp(), TAU * angle.to_f64());
        let seed = w - map.c / (2.0 * w);
        return boettcher_newton(map, &angle, g, seed, profile).ok_or(Error::RayStall {
            angle: format!("{angle:?}"),
            deepest_potential: g,
        });
    }
    s.descend(g, |_, _| {})?;
    Ok(s.z)
}

pub fn trace_external_ray(
    map: &QuadraticMap,
    angle: ExternalAngle,
    potential_start: f64,
    potential_end: f64,
    profile: &Profile,
) -> Result<RayTrace> {
    if !(potential_start > potential_end && potential_end > 0.0) {
        return Err(Error::Precondition(format!(
            "need potential_start > potential_end > 0, got {potential_start} and {potential_end}"
        )));
    }
    let ap = AnglePoint::exact(angle);
    let mut points = Vec::new();
    let mut potentials = Vec::new();
    let mut stepper = RayStepper::new(map, ap, profile);
    if potential_start >= stepper.g {
        let w = C64::from_polar(potential_start.exp(), TAU * angle.to_f64());
        let z = boettcher_newton(map, &ap, potential_start, w - map.c / (2.0 * w), profile)
            .ok_or(Error::RayStall {
                angle: angle.to_string(),
                deepest_potential: potential_start,
            })?;
        stepper.z = z;
        stepper.g = potential_start;
    } else {
        stepper.descend(potential_start, |_, _| {})?;
    }
    points.push(stepper.z);
    potentials.push(stepper.g);
    stepper.descend(potential_end, |z, g| {
        points.push(z);
        potentials.push(g);
    })?;
    let mut trace = RayTrace {
        angle,
        points,
        potentials,
        landing_estimate: None,
    };
    let (pre, _) = angle.preperiod_period();
    if potential_end * (pre as f64).exp2() <= profile.landing_threshold {
        let landing = refine_landing(map, &trace, profile)?;
        trace.landing_estimate = Some(landing.point);
    }
    Ok(trace)
}

/// A landing point with its refinement status.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Landing {
    pub point: C64,
    pub refined: bool,
    /// `|f^{pre+per}(z) - f^{pre}(z)| / max(|(f^pre)'(z)|, 1)`.
    pub residual: f64,
}

/// Newton-refine the landing point of a traced rational ray: first the periodic point
/// of the periodic image of the ray, then pulled back along the ray's own orbit.
pub fn refine_landing(map: &QuadraticMap, trace: &RayTrace, profile: &Profile) -> Result<Landing> {
    let (pre, per) = trace.angle.preperiod_period();
    let end = trace.last();
    let g_end = *trace.potentials.last().expect("non-empty");
    if g_end * (pre as f64).exp2() > profile.landing_threshold * 16.0 {
        return Err(Error::Precondition(format!(
            "ray of angle {} stopped at potential {g_end:e}, above the landing threshold",
            trace.angle
        )));
    }
    let orbit: Vec<C64> = {
        let mut v = Vec::with_capacity(pre as usize + 1);
        let mut z = end;
        v.push(z);
        for _ in 0..pre {
            z = map.forward(z);
            v.push(z);
        }
        v
    };
    let seed = orbit[pre as usize];
    let periodic = periodic_newton(map, seed, per as usize, profile.newton_max_iter);
    let Some(mut v) = periodic else {
        return Ok(Landing {
            point: end,
            refined: false,
            residual: landing_residual(map, end, pre, per),
        });
    };
    for j in (0..pre as usize).rev() {
        let [a, b] = map.preimages(v);
        v = if (a - orbit[j]).norm() <= (b - orbit[j]).norm() {
            a
        } else {
            b
        };
    }
    let residual = landing_residual(map, v, pre, per);
    Ok(Landing {
        point: v,
        refined: residual < 1e-12 * (1.0 + v.norm()),
        residual,
    })
}

/// Backward error of a landing point: the periodicity defect of `f^pre(z)` divided by the
/// expansion of `f^pre` at `z` (forward errors grow with that expansion).
fn landing_residual(map: &QuadraticMap, z: C64, pre: u32, per: u32) -> f64 {
    let (a, d) = map.iterate_with_derivative(z, pre as usize);
    let b = map.iterate(a, per as usize);
    (b - a).norm() / d.norm().max(1.0)
}

/// Newton for `f^p(w) = w`.
pub fn periodic_newton(map: &QuadraticMap, seed: C64, period: usize, cap: u32) -> Option<C64> {
    let mut w = seed;
    for _ in 0..cap {
        let (fw, d) = map.iterate_with_derivative(w, period);
        let dw = (fw - w) / (d - 1.0);
        if !dw.re.is_finite() || !dw.im.is_finite() {
            return None;
        }
        w -= dw;
        if dw.norm() <= 1e-15 * w.norm().max(1.0) {
            let (fw, _) = map.iterate_with_derivative(w, period);
            return ((fw - w).norm() < 1e-12 * w.norm().max(1.0)).then_some(w);
        }
    }
    None
}

/// Points on the equipotential of level `potential`, swept counterclockwise from
/// `angle_from` to `angle_to` (a full turn when they coincide).
pub fn trace_equipotential(
    map: &QuadraticMap,
    potential: f64,
    angle_from: ExternalAngle,
    angle_to: ExternalAngle,
    samples: usize,
    profile: &Profile,
) -> Result<Vec<C64>> {
    if samples < 2 {
        return Err(Error::Precondition("equipotential needs at least 2 samples".into()));
    }
    let (num, den) = angle_from.ccw_span_to(&angle_to);
    let full = num == 0;
    let span = if full { 1.0 } else { num as f64 / den as f64 };
    let offsets: Vec<f64> = (0..samples)
        .map(|i| {
            if full {
                span * i as f64 / samples as f64
            } else {
                span * i as f64 / (samples - 1) as f64
            }
        })
        .collect();
    equipotential_points(map, potential, angle_from, &offsets, profile)
}

/// Equipotential points at `base + offset` for increasing offsets.
pub fn equipotential_points(
    map: &QuadraticMap,
    potential: f64,
    base: ExternalAngle,
    offsets: &[f64],
    profile: &Profile,
) -> Result<Vec<C64>> {
    if !(potential > 0.0) {
        return Err(Error::Precondition("potential must be positive".into()));
    }
    let p = Profile::default();
    let gc = green_value(map, map.c, p.max_iter, map.default_escape_radius())?;
    if gc > 0.0 && potential <= gc / 2.0 * (1.0 + 1e-9) {
        return Err(Error::FigureEight {
            potential,
            critical_level: gc / 2.0,
        });
    }
    let first = offsets.first().copied().unwrap_or(0.0);
    let mut z = ray_point(map, AnglePoint::new(base, first), potential, profile)?;
    let mut cur = first;
    let mut out = Vec::with_capacity(offsets.len());
    out.push(z);
    for &target in offsets.iter().skip(1) {
        z = continue_equipotential(map, potential, base, cur, z, target, profile)?;
        cur = target;
        out.push(z);
    }
    Ok(out)
}

/// Move along the equipotential of level `potential` from the known point `from_point`
/// at angle `base + from_offset` to angle `base + to_offset`.
pub fn continue_equipotential(
    map: &QuadraticMap,
    potential: f64,
    base: ExternalAngle,
    from_offset: f64,
    from_point: C64,
    to_offset: f64,
    profile: &Profile,
) -> Result<C64> {
    let k = doubling_depth(potential, profile.big_potential);
    // at most 1/64 turn of the pushed-forward target per continuation step
    let max_step = 1.0 / (64.0 * (k as f64).exp2());
    let n = ((to_offset - from_offset).abs() / max_step).ceil().max(1.0) as usize;
    let mut z = from_point;
    for i in 1..=n {
        let off = from_offset + (to_offset - from_offset) * i as f64 / n as f64;
        let ap = AnglePoint::new(base, off);
        let t = boettcher_target(&ap, potential, k);
        z = newton_on_iterate(map, k, t, z, profile.newton_max_iter).ok_or(Error::RayStall {
            angle: format!("equipotential at {ap:?}"),
            deepest_potential: potential,
        })?;
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn green_value_of_z_squared() {
        let m = QuadraticMap::real(0.0).unwrap();
        let g = green_value(&m, c(4.0, 0.0), 100, 4.0).unwrap();
        assert!((g - 4f64.ln()).abs() < 1e-14);
        let g = green_value(&m, C64::from_polar(1.0, 0.3), 200, 4.0).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn green_value_rejects_non_finite_points() {
        let m = QuadraticMap::real(-1.0).unwrap();
        assert!(matches!(
            green_value(&m, c(f64::NAN, 0.0), 10, 4.0),
            Err(Error::Domain(_))
        ));
        assert!(green_value(&m, c(1.0, 0.0), 0, 4.0).is_err());
    }

    #[test]
    fn green_value_stable_under_more_iterations() {
        let m = QuadraticMap::real(-1.0).unwrap();
        let a = green_value(&m, c(3.0, 0.0), 50, 4.0).unwrap();
        let b = green_value(&m, c(3.0, 0.0), 100, 4.0).unwrap();
        // direct oracle: log|f^n(3)| / 2^n at n = 5 and 6 (no bailout tricks)
        let mut z = c(3.0, 0.0);
        let mut direct = 0.0;
        for n in 1..=6 {
            z = z * z - 1.0;
            direct = z.norm().ln() / (n as f64).exp2();
        }
        assert!((a - b).abs() < 1e-10);
        assert!((a - direct).abs() < 1e-10);
    }

    #[test]
    fn fixed_points_examples() {
        let fp = fixed_points(&QuadraticMap::real(0.0).unwrap());
        assert!((fp.alpha - c(0.0, 0.0)).norm() < 1e-15);
        assert!((fp.beta - c(1.0, 0.0)).norm() < 1e-15);
        let fp = fixed_points(&QuadraticMap::real(-1.0).unwrap());
        assert!((fp.beta.re - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
        let fp = fixed_points(&QuadraticMap::real(0.25).unwrap());
        assert!(fp.degenerate);
        assert!((fp.alpha - c(0.5, 0.0)).norm() < 1e-7);
    }

    #[test]
    fn ray_at_c_zero_is_radial() {
        let m = QuadraticMap::real(0.0).unwrap();
        let t = trace_external_ray(&m, ExternalAngle::ZERO, 2.0, 0.5, &Profile::default()).unwrap();
        for (z, g) in t.points.iter().zip(&t.potentials) {
            assert!((z - c(g.exp(), 0.0)).norm() < 1e-12 * g.exp());
        }
        assert!(t.landing_estimate.is_none());
    }

    #[test]
    fn rays_land_at_fixed_points_for_basilica() {
        let m = QuadraticMap::real(-1.0).unwrap();
        let p = Profile::default();
        let fp = fixed_points(&m);
        let t0 = trace_external_ray(&m, ExternalAngle::ZERO, 4.0, 1e-8, &p).unwrap();
        assert!((t0.landing_estimate.unwrap() - fp.beta).norm() < 1e-8);
        let third = ExternalAngle::new(1, 3).unwrap();
        let t = trace_external_ray(&m, third, 4.0, 1e-8, &p).unwrap();
        assert!((t.landing_estimate.unwrap() - fp.alpha).norm() < 1e-8);
        let l = refine_landing(&m, &t, &p).unwrap();
        assert!(l.refined);
        assert!((l.point - c((1.0 - 5f64.sqrt()) / 2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn half_ray_of_z_squared_lands_at_minus_one() {
        let m = QuadraticMap::real(0.0).unwrap();
        let p = Profile::default();
        let t = trace_external_ray(&m, ExternalAngle::new(1, 2).unwrap(), 2.0, 1e-9, &p).unwrap();
        let l = refine_landing(&m, &t, &p).unwrap();
        assert!((l.point - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn ray_potentials_match_green_values() {
        let m = QuadraticMap::new(c(-0.12, 0.75)).unwrap();
        let p = Profile::default();
        let t = trace_external_ray(&m, ExternalAngle::new(1, 7).unwrap(), 3.0, 1e-4, &p).unwrap();
        for w in t.potentials.windows(2) {
            assert!(w[1] < w[0]);
        }
        for (z, g) in t.points.iter().zip(&t.potentials) {
            let measured = potential(&m, *z);
            assert!((measured - g).abs() < 1e-8 * g.max(1e-3), "{measured} vs {g}");
        }
    }

    #[test]
    fn equipotential_examples() {
        let p = Profile::default();
        let m0 = QuadraticMap::real(0.0).unwrap();
        let pts = trace_equipotential(&m0, 2f64.ln(), ExternalAngle::ZERO, ExternalAngle::ZERO, 4, &p)
            .unwrap();
        assert_eq!(pts.len(), 4);
        for z in pts {
            assert!((z.norm() - 2.0).abs() < 1e-12);
        }
        let m = QuadraticMap::real(-1.0).unwrap();
        let pts = trace_equipotential(
            &m,
            1.0,
            ExternalAngle::ZERO,
            ExternalAngle::new(1, 2).unwrap(),
            17,
            &p,
        )
        .unwrap();
        for z in &pts {
            assert!((potential(&m, *z) - 1.0).abs() < 1e-8);
        }
        assert!(matches!(
            trace_equipotential(&m, 1.0, ExternalAngle::ZERO, ExternalAngle::ZERO, 1, &p),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn figure_eight_guard() {
        let m = QuadraticMap::real(1.0).unwrap();
        let gc = potential(&m, m.c);
        let err = trace_equipotential(
            &m,
            gc / 4.0,
            ExternalAngle::ZERO,
            ExternalAngle::ZERO,
            8,
            &Profile::default(),
        );
        assert!(matches!(err, Err(Error::FigureEight { .. })));
    }
}
