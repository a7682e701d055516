//! Parameter rays and equipotentials.
//!
//! Newton acts on `c` in `f_c^k(c) = exp(2^k (g + 2πiθ))`, the identity `Φ_M(c) = Φ_c(c)`
//! pushed out to large potential, with `d/dc` of the critical orbit carried in forward
//! mode: `w_{j+1}' = 2 w_j w_j' + 1`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::quaddyn::{
    boettcher_target, doubling_depth, green_value, AnglePoint, ExternalAngle, Profile, QuadraticMap,
    RayTrace,
};

/// `G_c(c)`, the potential of `c` in the parameter plane.
pub fn parameter_green(c: C64, max_iter: u32, escape_radius: f64) -> Result<f64> {
    green_value(&QuadraticMap { c }, c, max_iter, escape_radius)
}

/// `f_c^k(c)` and its derivative in `c`.
pub(crate) fn critical_value_orbit(c: C64, k: usize) -> (C64, C64) {
    let mut w = c;
    let mut d = C64::new(1.0, 0.0);
    for _ in 0..k {
        d = 2.0 * w * d + 1.0;
        w = w * w + c;
    }
    (w, d)
}

fn param_newton(angle: &AnglePoint, g: f64, seed: C64, profile: &Profile) -> Option<C64> {
    let k = doubling_depth(g, profile.big_potential);
    let target = boettcher_target(angle, g, k);
    let mut c = seed;
    let mut prev = f64::INFINITY;
    for _ in 0..profile.newton_max_iter {
        let (w, d) = critical_value_orbit(c, k as usize);
        let dc = (w - target) / d;
        if !dc.re.is_finite() || !dc.im.is_finite() {
            return None;
        }
        c -= dc;
        let scale = c.norm().max(1e-30);
        let stalled = dc.norm() >= 0.5 * prev && (w - target).norm() <= 1e-6 * target.norm();
        if dc.norm() <= 1e-14 * scale || stalled {
            return Some(c);
        }
        prev = dc.norm();
    }
    None
}

/// Continuation down a parameter ray.
pub(crate) struct ParamStepper<'a> {
    angle: AnglePoint,
    profile: &'a Profile,
    pub c: C64,
    pub g: f64,
}

impl<'a> ParamStepper<'a> {
    pub fn new(angle: AnglePoint, profile: &'a Profile) -> Self {
        let g = profile.big_potential;
        let w = C64::from_polar(g.exp(), std::f64::consts::TAU * angle.to_f64());
        // Φ_M(c) = c + 1/2 + O(1/c)
        let seed = w - 0.5;
        let c = param_newton(&angle, g, seed, profile).unwrap_or(seed);
        Self { angle, profile, c, g }
    }

    pub fn at(angle: AnglePoint, profile: &'a Profile, c: C64, g: f64) -> Self {
        Self { angle, profile, c, g }
    }

    pub fn step_to(&mut self, g_next: f64) -> Result<()> {
        self.step_rec(g_next, self.profile.max_bisections)
    }

    fn step_rec(&mut self, g_next: f64, budget: u32) -> Result<()> {
        if let Some(c) = param_newton(&self.angle, g_next, self.c, self.profile) {
            self.c = c;
            self.g = g_next;
            return Ok(());
        }
        if budget == 0 {
            return Err(Error::RayStall {
                angle: format!("parameter {:?}", self.angle),
                deepest_potential: self.g,
            });
        }
        let mid = (self.g * g_next).sqrt();
        self.step_rec(mid, budget - 1)?;
        self.step_rec(g_next, budget - 1)
    }

    pub fn descend(&mut self, g_end: f64, mut visit: impl FnMut(C64, f64)) -> Result<()> {
        let ratio = (-1.0 / self.profile.steps_per_halving as f64).exp2();
        while self.g > g_end {
            let next = (self.g * ratio).max(g_end);
            let next = if next < g_end * (1.0 + 1e-12) { g_end } else { next };
            self.step_to(next)?;
            visit(self.c, self.g);
        }
        Ok(())
    }
}

/// Parameter with `G_c(c) = g` on the parameter ray of `angle`.
pub fn parameter_ray_point(angle: AnglePoint, g: f64, profile: &Profile) -> Result<C64> {
    if !(g > 0.0) {
        return Err(Error::Precondition("potential must be positive".into()));
    }
    let mut s = ParamStepper::new(angle, profile);
    if g >= s.g {
        let w = C64::from_polar(g.exp(), std::f64::consts::TAU * angle.to_f64());
        return param_newton(&angle, g, w - 0.5, profile).ok_or(Error::RayStall {
            angle: format!("parameter {angle:?}"),
            deepest_potential: g,
        });
    }
    s.descend(g, |_, _| {})?;
    Ok(s.c)
}

/// Newton for the Misiurewicz parameter with `f_c^{pre+per}(c) = f_c^{pre}(c)`.
pub fn misiurewicz_newton(seed: C64, pre: u32, per: u32, cap: u32) -> Option<C64> {
    let mut c = seed;
    for _ in 0..cap {
        let (a, da) = critical_value_orbit(c, pre as usize);
        // continue the same orbit `per` more steps
        let (mut w, mut d) = (a, da);
        for _ in 0..per {
            d = 2.0 * w * d + 1.0;
            w = w * w + c;
        }
        let dc = (w - a) / (d - da);
        if !dc.re.is_finite() || !dc.im.is_finite() {
            return None;
        }
        c -= dc;
        if dc.norm() <= 1e-15 * c.norm().max(1.0) {
            return Some(c);
        }
    }
    None
}

/// Landing parameter of a strictly preperiodic parameter ray from a point near it.
/// Rejects roots of smaller preperiod.
pub(crate) fn misiurewicz_landing(angle: ExternalAngle, seed: C64, profile: &Profile) -> Result<C64> {
    let (pre, per) = angle.preperiod_period();
    if pre == 0 {
        return Err(Error::Precondition(format!(
            "parameter ray {angle} is periodic; its landing point is parabolic"
        )));
    }
    let c = misiurewicz_newton(seed, pre, per, 4 * profile.newton_max_iter).ok_or_else(|| {
        Error::Newton(format!("Misiurewicz landing of parameter ray {angle} did not converge"))
    })?;
    let (a, _) = critical_value_orbit(c, pre as usize - 1);
    let (b, _) = critical_value_orbit(c, (pre + per) as usize - 1);
    if (a - b).norm() < 1e-8 * (1.0 + a.norm()) {
        return Err(Error::Newton(format!(
            "landing of parameter ray {angle} converged to a parameter of smaller preperiod"
        )));
    }
    Ok(c)
}

/// Landing parameter of a periodic parameter ray at a satellite root `r/p` of the main
/// cardioid, `e^{2πir/p}/2 - e^{4πir/p}/4`. Such angles belong to a doubling cycle that
/// rotates by `r/p` and bound its shortest gap. Other periodic angles land at roots off
/// the cardioid, which are not located.
pub fn parabolic_landing(angle: ExternalAngle) -> Result<C64> {
    let (pre, per) = angle.preperiod_period();
    if pre != 0 {
        return Err(Error::Precondition(format!("parameter ray {angle} is not periodic")));
    }
    let p = per as usize;
    let orbit: Vec<ExternalAngle> = (0..per).map(|k| angle.doubled(k)).collect();
    let mut sorted = orbit.clone();
    sorted.sort();
    let rank = |a: &ExternalAngle| sorted.iter().position(|b| b == a).expect("orbit member");
    let shift = |k: usize| (rank(&orbit[(k + 1) % p]) + p - rank(&orbit[k])) % p;
    let r = shift(0);
    let rotates = (0..p).all(|k| shift(k) == r) && (p == 1 || gcd(r, p) == 1);
    let gap = |i: usize| {
        let d = sorted[(i + 1) % p].to_f64() - sorted[i].to_f64();
        if d <= 0.0 {
            d + 1.0
        } else {
            d
        }
    };
    let shortest = (0..p).min_by(|&i, &j| gap(i).total_cmp(&gap(j))).expect("non-empty orbit");
    let bounds = angle == sorted[shortest] || angle == sorted[(shortest + 1) % p];
    if !rotates || !bounds {
        return Err(Error::UnderResolved(format!(
            "parameter ray {angle} lands at a parabolic root off the main cardioid"
        )));
    }
    let mu = C64::from_polar(1.0, std::f64::consts::TAU * r as f64 / p as f64);
    Ok(mu / 2.0 - mu * mu / 4.0)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Parameter ray of `angle` from `potential_start` to `potential_end`. The landing
/// estimate is the Misiurewicz parameter found by Newton from the last point
/// (preperiodic angles), the cardioid root (periodic angles rotating like an interior
/// angle), or the last point itself once the end is below the landing threshold.
pub fn trace_parameter_ray(
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
    let mut s = ParamStepper::new(ap, profile);
    if potential_start >= s.g {
        s.c = parameter_ray_point(ap, potential_start, profile)?;
        s.g = potential_start;
    } else {
        s.descend(potential_start, |_, _| {})?;
    }
    let mut points = vec![s.c];
    let mut potentials = vec![s.g];
    s.descend(potential_end, |c, g| {
        points.push(c);
        potentials.push(g);
    })?;
    let (pre, _) = angle.preperiod_period();
    let last = *points.last().expect("non-empty");
    let landing_estimate = if pre > 0 {
        Some(misiurewicz_landing(angle, last, profile)?)
    } else if let Ok(root) = parabolic_landing(angle) {
        Some(root)
    } else if potential_end <= profile.landing_threshold {
        Some(last)
    } else {
        None
    };
    Ok(RayTrace {
        angle,
        points,
        potentials,
        landing_estimate,
    })
}

/// Move along the parameter equipotential `g` from `from_param` at `base + from_offset`
/// to `base + to_offset`.
pub(crate) fn continue_parameter_equipotential(
    g: f64,
    base: ExternalAngle,
    from_offset: f64,
    from_param: C64,
    to_offset: f64,
    profile: &Profile,
) -> Result<C64> {
    let k = doubling_depth(g, profile.big_potential);
    let max_step = 1.0 / (64.0 * (k as f64).exp2());
    let n = ((to_offset - from_offset).abs() / max_step).ceil().max(1.0) as usize;
    let mut c = from_param;
    for i in 1..=n {
        let off = from_offset + (to_offset - from_offset) * i as f64 / n as f64;
        let ap = AnglePoint::new(base, off);
        c = param_newton(&ap, g, c, profile).ok_or(Error::RayStall {
            angle: format!("parameter equipotential at {ap:?}"),
            deepest_potential: g,
        })?;
    }
    Ok(c)
}

/// Points of the parameter equipotential `g` at `base + offset` for increasing offsets.
pub fn parameter_equipotential(g: f64, base: ExternalAngle, offsets: &[f64], profile: &Profile) -> Result<Vec<C64>> {
    let first = offsets.first().copied().unwrap_or(0.0);
    let mut c = parameter_ray_point(AnglePoint::new(base, first), g, profile)?;
    let mut cur = first;
    let mut out = Vec::with_capacity(offsets.len());
    out.push(c);
    for &t in offsets.iter().skip(1) {
        c = continue_parameter_equipotential(g, base, cur, c, t, profile)?;
        cur = t;
        out.push(c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn angle(s: &str) -> ExternalAngle {
        s.parse().unwrap()
    }

    #[test]
    fn parameter_green_matches_dynamical_value() {
        let c = C64::new(-2.5, 0.0);
        let a = parameter_green(c, 4096, 4.5).unwrap();
        let b = green_value(&QuadraticMap { c }, c, 4096, 4.5).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(parameter_green(C64::new(-1.0, 0.0), 4096, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn half_ray_lands_at_the_tip() {
        let p = Profile::default();
        let t = trace_parameter_ray(angle("1/2"), 1.0, 1e-5, &p).unwrap();
        let c = t.landing_estimate.unwrap();
        assert!((c - C64::new(-2.0, 0.0)).norm() < 1e-8);
        // oracle: f^2(0) = f^3(0) at the tip
        let m = QuadraticMap { c };
        assert!((m.iterate(C64::default(), 2) - m.iterate(C64::default(), 3)).norm() < 1e-12);
    }

    #[test]
    fn ray_points_have_their_potential() {
        let p = Profile::default();
        for (a, g) in [("1/7", 0.3), ("5/12", 0.05), ("1/3", 0.01)] {
            let c = parameter_ray_point(AnglePoint::exact(angle(a)), g, &p).unwrap();
            let gc = parameter_green(c, 100_000, 4.0 + c.norm()).unwrap();
            assert!((gc - g).abs() < 1e-9 * g, "{a}: {gc} vs {g}");
        }
    }

    #[test]
    fn wake_rays_creep_toward_the_parabolic_root() {
        // the Green's function decays like exp(-C/sqrt(dist)) at a cusp, so the approach
        // is logarithmically slow in the potential
        let p = Profile::default();
        let root = C64::new(-0.75, 0.0);
        let a = trace_parameter_ray(angle("1/3"), 1.0, 1e-6, &p).unwrap();
        let b = trace_parameter_ray(angle("2/3"), 1.0, 1e-6, &p).unwrap();
        let d: Vec<f64> = a.points.iter().map(|c| (c - root).norm()).collect();
        assert!(d.windows(8).step_by(8).all(|w| w[7] < w[0]));
        assert!(d.last().unwrap() < &0.2);
        assert!((a.last() - b.last().conj()).norm() < 1e-10);
        for t in [&a, &b] {
            let est = t.landing_estimate.unwrap();
            // oracle: the fixed point (1 - sqrt(1 - 4c))/2 has multiplier -1 at the root
            let z = (1.0 - (1.0 - 4.0 * est).sqrt()) / 2.0;
            assert!((2.0 * z + 1.0).norm() < 1e-12);
            assert!((est - root).norm() < 1e-6);
        }
        let t = trace_parameter_ray(angle("0"), 1.0, 1e-7, &p).unwrap();
        let est = t.landing_estimate.unwrap();
        assert!((est - C64::new(0.25, 0.0)).norm() < 1e-12);
        assert!(t.points.iter().all(|c| c.im.abs() < 1e-12));
    }

    #[test]
    fn cardioid_roots_from_rotation_cycles() {
        // 1/7 and 2/7 bound the 1/3-limb; 3/7 belongs to the 2/3-rotation cycle but
        // lands at the root of the period-3 component on the real axis
        let third = parabolic_landing(angle("1/7")).unwrap();
        assert_eq!(third, parabolic_landing(angle("2/7")).unwrap());
        // oracle: fixed point with multiplier e^{2πi/3}
        let mu = C64::from_polar(1.0, std::f64::consts::TAU / 3.0);
        let z = mu / 2.0;
        assert!((z * z + third - z).norm() < 1e-15);
        assert!(parabolic_landing(angle("3/7")).is_err());
        assert!(parabolic_landing(angle("1/12")).is_err());
    }
}
