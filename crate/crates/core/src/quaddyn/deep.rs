//! Rays and equipotentials at potentials too small for Newton on `f^k` in double
//! precision. The curve is traced at `2^K` times the potential and pulled back `K`
//! times along the orbit of its angle, each preimage branch chosen by continuity
//! from a point traced directly at potential 8.

use num_complex::Complex64 as C64;

use super::{
    equipotential_points, periodic_newton, refine_landing, trace_external_ray, AnglePoint,
    ExternalAngle, Profile, QuadraticMap, RayStepper,
};
use crate::error::{Error, Result};

/// Smallest potential traced by direct Newton.
pub(crate) const DIRECT_FLOOR: f64 = 1.0 / 65536.0;

/// Pulled-back points closer to the wrong branch than this ratio trigger subdivision.
const AMBIGUITY: f64 = 0.5;
const MAX_SPLITS: u32 = 40;

/// A polyline with the potential of each vertex.
pub(crate) type Trail = Vec<(C64, f64)>;

fn geometric_mid(a: f64, b: f64) -> f64 {
    if a > 0.0 && b > 0.0 {
        (a * b).sqrt()
    } else {
        0.5 * (a + b)
    }
}

struct OpenWalker<'a> {
    map: &'a QuadraticMap,
    h: f64,
    /// Spacing applies only to preimage points at or below this potential.
    g_max: f64,
    v: C64,
    out: Trail,
}

impl OpenWalker<'_> {
    fn segment(&mut self, a: (C64, f64), b: (C64, f64), depth: u32) -> Result<()> {
        let r = (b.0 - self.map.c).sqrt();
        let (d1, d2) = ((r - self.v).norm(), (-r - self.v).norm());
        let (p, near, far) = if d1 <= d2 { (r, d1, d2) } else { (-r, d2, d1) };
        let ambiguous = far == 0.0 || near / far > AMBIGUITY;
        if ambiguous && depth >= MAX_SPLITS {
            return Err(Error::BranchPinch { location: b.0 });
        }
        if ambiguous || (near > self.h && b.1 / 2.0 <= self.g_max && depth < MAX_SPLITS) {
            let m = (0.5 * (a.0 + b.0), geometric_mid(a.1, b.1));
            self.segment(a, m, depth + 1)?;
            return self.segment(m, b, depth + 1);
        }
        self.v = p;
        self.out.push((p, b.1 / 2.0));
        Ok(())
    }
}

/// Preimage of an open polyline starting from the branch of `image[0]` nearest `start`.
/// Gaps exceeding `h` are subdivided among points at potential at most `g_max`.
pub(crate) fn pull_back_open(
    map: &QuadraticMap,
    image: &[(C64, f64)],
    start: C64,
    h: f64,
    g_max: f64,
) -> Result<Trail> {
    let first = image.first().ok_or(Error::EmptySet)?;
    let r0 = (first.0 - map.c).sqrt();
    let v = if (r0 - start).norm() <= (-r0 - start).norm() { r0 } else { -r0 };
    let mut w = OpenWalker {
        map,
        h,
        g_max,
        v,
        out: vec![(v, first.1 / 2.0)],
    };
    for pair in image.windows(2) {
        w.segment(pair[0], pair[1], 0)?;
    }
    Ok(w.out)
}

/// Ray points from potential 16 down to 8, traced directly.
fn ray_head(map: &QuadraticMap, angle: AnglePoint, profile: &Profile) -> Result<Trail> {
    let mut s = RayStepper::new(map, angle, profile);
    let mut out = vec![(s.z, s.g)];
    s.descend(s.g / 2.0, |z, g| out.push((z, g)))?;
    Ok(out)
}

/// Pull `base` (a trail on the ray of `angle` doubled `k` times, starting at potential 16)
/// back `k` times. Returns the trail on the ray of `angle` and the end point of every
/// intermediate trail (index `j` for angle doubled `j` times).
fn pull_back_ray(
    map: &QuadraticMap,
    angle: AnglePoint,
    k: u32,
    base: Trail,
    h: f64,
    g_max: f64,
    profile: &Profile,
) -> Result<(Trail, Vec<C64>)> {
    let mut angles = vec![angle];
    for _ in 0..k {
        let a = angles.last().expect("non-empty").double();
        angles.push(a);
    }
    let mut ends = vec![C64::default(); k as usize + 1];
    ends[k as usize] = base.last().ok_or(Error::EmptySet)?.0;
    let mut trail = base;
    for j in (0..k as usize).rev() {
        let mut head = ray_head(map, angles[j], profile)?;
        let join = head.pop().expect("head has points").0;
        let hj = if j == 0 { h } else { f64::INFINITY };
        let pulled = pull_back_open(map, &trail, join, hj, g_max)?;
        head.extend(pulled);
        trail = head;
        ends[j] = trail.last().expect("non-empty").0;
    }
    Ok((trail, ends))
}

/// Doublings needed to lift potential `g` above [`DIRECT_FLOOR`].
pub(crate) fn lift_count(g: f64) -> u32 {
    if g >= DIRECT_FLOOR {
        0
    } else {
        (DIRECT_FLOOR / g).log2().ceil() as u32
    }
}

/// Ray of `angle` from potential 16 down to `g_end > 0`, with end points of the
/// intermediate lifted rays.
pub(crate) fn ray_trail(
    map: &QuadraticMap,
    angle: AnglePoint,
    g_end: f64,
    h: f64,
    profile: &Profile,
) -> Result<(Trail, Vec<C64>)> {
    let k = lift_count(g_end);
    let mut lifted = angle;
    for _ in 0..k {
        lifted = lifted.double();
    }
    let mut s = RayStepper::new(map, lifted, profile);
    let mut base = vec![(s.z, s.g)];
    s.descend(g_end * (k as f64).exp2(), |z, g| base.push((z, g)))?;
    pull_back_ray(map, angle, k, base, h, g_end, profile)
}

/// Point on the ray of `angle` at potential `g`, for any `g > 0`.
pub(crate) fn deep_ray_point(map: &QuadraticMap, angle: AnglePoint, g: f64, profile: &Profile) -> Result<C64> {
    let (_, ends) = ray_trail(map, angle, g, f64::INFINITY, profile)?;
    Ok(ends[0])
}

/// Ray of a rational angle from potential 16 down to and including its landing point
/// (potential 0). The periodic image ray is traced directly and its landing point
/// found by Newton; the rest comes from pullbacks. Gaps below potential `g_max` are
/// at most `h` where the trail was pulled back.
pub(crate) fn landed_ray(
    map: &QuadraticMap,
    angle: ExternalAngle,
    h: f64,
    g_max: f64,
    profile: &Profile,
) -> Result<Trail> {
    let (pre, _) = angle.preperiod_period();
    let periodic = angle.doubled(pre);
    let start = profile.big_potential;
    let trace = trace_external_ray(map, periodic, start, profile.landing_threshold, profile)?;
    let landing = refine_landing(map, &trace, profile)?;
    if !landing.refined {
        return Err(Error::Newton(format!(
            "landing point of ray {periodic} did not converge (residual {:e})",
            landing.residual
        )));
    }
    let mut base: Trail = trace.points.into_iter().zip(trace.potentials).collect();
    base.push((landing.point, 0.0));
    let (trail, _) = pull_back_ray(map, AnglePoint::exact(angle), pre, base, h, g_max, profile)?;
    Ok(trail)
}

/// Landing point of a rational ray, by pullback.
pub(crate) fn deep_landing(map: &QuadraticMap, angle: ExternalAngle, profile: &Profile) -> Result<C64> {
    let trail = landed_ray(map, angle, f64::INFINITY, 0.0, profile)?;
    let z = trail.last().ok_or(Error::EmptySet)?.0;
    // Polish against the preperiodic equation when the multiplier allows it.
    let (pre, per) = angle.preperiod_period();
    if pre == 0 {
        return Ok(periodic_newton(map, z, per as usize, profile.newton_max_iter).unwrap_or(z));
    }
    Ok(z)
}

/// Equipotential arc of level `potential` from `base + from` counterclockwise over
/// `span` turns, lifted and pulled back when `potential` is below [`DIRECT_FLOOR`].
/// Adjacent points are at most `h` apart on the final curve.
pub(crate) fn deep_equipotential(
    map: &QuadraticMap,
    potential: f64,
    base: ExternalAngle,
    span: f64,
    h: f64,
    profile: &Profile,
) -> Result<Vec<C64>> {
    let mut k = lift_count(potential);
    // the lifted arc must stay shorter than a full turn
    while k > 0 && span * (k as f64).exp2() >= 0.5 {
        k -= 1;
    }
    if k == 0 {
        return Err(Error::UnderResolved(format!(
            "equipotential at potential {potential:e} spanning {span} turns cannot be lifted"
        )));
    }
    let (_, ends) = ray_trail(map, AnglePoint::exact(base), potential, f64::INFINITY, profile)?;
    let lifted_base = base.doubled(k);
    let lifted_span = span * (k as f64).exp2();
    let lifted_g = potential * (k as f64).exp2();
    let n = 64;
    let offsets: Vec<f64> = (0..=n).map(|i| lifted_span * i as f64 / n as f64).collect();
    let pts = equipotential_points(map, lifted_g, lifted_base, &offsets, profile)?;
    let mut trail: Trail = pts.into_iter().map(|z| (z, lifted_g)).collect();
    for j in (0..k as usize).rev() {
        let hj = if j == 0 { h } else { f64::INFINITY };
        trail = pull_back_open(map, &trail, ends[j], hj, f64::INFINITY)?;
    }
    Ok(trail.into_iter().map(|(z, _)| z).collect())
}
