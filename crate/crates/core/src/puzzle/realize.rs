//! Tracing the boundary of a piece from its combinatorics.

use num_complex::Complex64 as C64;

use super::{arc_span, ArcKind, BoundaryArc, Combinatorics, PieceLabel, PuzzlePiece};
use crate::error::{Error, Result};
use crate::geometry;
use crate::quaddyn::{
    continue_equipotential, deep_equipotential, deep_landing, equipotential_points, landed_ray,
    ray_point, AnglePoint, ExternalAngle, Profile, QuadraticMap, RayStepper, DIRECT_FLOOR,
};

/// Boundary points per piece diameter.
pub(crate) const SPACING_DIVISOR: f64 = 256.0;

pub(crate) struct RayArc {
    /// From the equipotential level down to the landing point (inclusive).
    pub points: Vec<C64>,
    pub potentials: Vec<f64>,
    pub landing: C64,
}

/// Ray of `theta` from potential `level` to its landing point, gaps at most `h` where
/// the ray is traced directly.
pub(crate) fn ray_arc(map: &QuadraticMap, theta: ExternalAngle, level: f64, h: f64, profile: &Profile) -> Result<RayArc> {
    let top = ray_point(map, AnglePoint::exact(theta), level, profile)?;
    let trail = landed_ray(map, theta, h, level, profile)?;
    let landing = trail.last().ok_or(Error::EmptySet)?.0;
    let mut arc = RayArc {
        points: vec![top],
        potentials: vec![level],
        landing,
    };
    for (z, g) in trail {
        if g < level * (1.0 - 1e-9) {
            arc.points.push(z);
            arc.potentials.push(g);
        }
    }
    if h.is_finite() {
        refine_ray(map, theta, &mut arc, h, profile)?;
    }
    Ok(arc)
}

pub(crate) fn landing_of(map: &QuadraticMap, theta: ExternalAngle, profile: &Profile) -> Result<C64> {
    deep_landing(map, theta, profile)
}

/// Insert traced points until no gap exceeds `h`, where both ends are at potentials
/// Newton can reach directly.
fn refine_ray(map: &QuadraticMap, theta: ExternalAngle, arc: &mut RayArc, h: f64, profile: &Profile) -> Result<()> {
    let ap = AnglePoint::exact(theta);
    let mut pts = Vec::with_capacity(arc.points.len());
    let mut pots = Vec::with_capacity(arc.points.len());
    let n = arc.points.len();
    for i in 0..n - 1 {
        pts.push(arc.points[i]);
        pots.push(arc.potentials[i]);
        if arc.potentials[i + 1] < DIRECT_FLOOR {
            continue;
        }
        let mut stack = vec![(arc.points[i], arc.potentials[i], arc.points[i + 1], arc.potentials[i + 1], 0u32)];
        // depth-first keeps the output ordered when we emit on the way back
        let mut emitted: Vec<(C64, f64)> = Vec::new();
        while let Some((a, ga, b, gb, depth)) = stack.pop() {
            if (b - a).norm() <= h || depth > 24 {
                emitted.push((b, gb));
                continue;
            }
            let gm = (ga * gb).sqrt();
            let mut stepper = RayStepper::at(map, ap, profile, a, ga);
            stepper.step_to(gm)?;
            let m = stepper.z;
            stack.push((m, gm, b, gb, depth + 1));
            stack.push((a, ga, m, gm, depth + 1));
        }
        emitted.pop();
        for (z, g) in emitted {
            pts.push(z);
            pots.push(g);
        }
    }
    pts.push(arc.points[n - 1]);
    pots.push(arc.potentials[n - 1]);
    arc.points = pts;
    arc.potentials = pots;
    Ok(())
}

/// Equipotential arc from `from` counterclockwise to `to`, gaps at most `h`.
pub(crate) fn equipotential_arc(
    map: &QuadraticMap,
    level: f64,
    from: ExternalAngle,
    to: ExternalAngle,
    h: f64,
    profile: &Profile,
) -> Result<Vec<C64>> {
    let (n, d) = arc_span(&from, &to);
    let span = n as f64 / d as f64;
    if level < DIRECT_FLOOR {
        return deep_equipotential(map, level, from, span, h, profile);
    }
    let n0 = 32;
    let mut offsets: Vec<f64> = (0..=n0).map(|i| span * i as f64 / n0 as f64).collect();
    let mut pts = equipotential_points(map, level, from, &offsets, profile)?;
    for _ in 0..40 {
        let mut new_off = Vec::with_capacity(offsets.len() * 2);
        let mut new_pts = Vec::with_capacity(offsets.len() * 2);
        let mut changed = false;
        for i in 0..offsets.len() {
            new_off.push(offsets[i]);
            new_pts.push(pts[i]);
            if i + 1 < offsets.len() && (pts[i + 1] - pts[i]).norm() > h {
                let mid = 0.5 * (offsets[i] + offsets[i + 1]);
                let z = continue_equipotential(map, level, from, offsets[i], pts[i], mid, profile)?;
                new_off.push(mid);
                new_pts.push(z);
                changed = true;
            }
        }
        offsets = new_off;
        pts = new_pts;
        if !changed {
            break;
        }
    }
    Ok(pts)
}

/// Tracing backend for piece boundaries: the dynamical plane of one map, or the
/// parameter plane.
pub(crate) trait BoundaryTracer {
    /// Ray of `theta` from potential `level` down to its landing point; gaps at most `h`.
    fn ray(&self, theta: ExternalAngle, level: f64, h: f64) -> Result<RayArc>;
    /// Equipotential arc of `level` from `from` counterclockwise to `to`; gaps at most `h`.
    fn equipotential(&self, level: f64, from: ExternalAngle, to: ExternalAngle, h: f64) -> Result<Vec<C64>>;
}

pub(crate) struct DynamicalTracer<'a> {
    pub map: &'a QuadraticMap,
    pub profile: &'a Profile,
}

impl BoundaryTracer for DynamicalTracer<'_> {
    fn ray(&self, theta: ExternalAngle, level: f64, h: f64) -> Result<RayArc> {
        ray_arc(self.map, theta, level, h, self.profile)
    }

    fn equipotential(&self, level: f64, from: ExternalAngle, to: ExternalAngle, h: f64) -> Result<Vec<C64>> {
        equipotential_arc(self.map, level, from, to, h, self.profile)
    }
}

/// Trace the boundary of the piece with the given combinatorics.
pub fn realize(
    map: &QuadraticMap,
    comb: &Combinatorics,
    depth: usize,
    label: PieceLabel,
    profile: &Profile,
) -> Result<PuzzlePiece> {
    realize_with(&DynamicalTracer { map, profile }, comb, depth, label)
}

pub(crate) fn realize_with(
    tracer: &impl BoundaryTracer,
    comb: &Combinatorics,
    depth: usize,
    label: PieceLabel,
) -> Result<PuzzlePiece> {
    let level = comb.level;
    let n = comb.arcs.len();
    // coarse pass for the diameter
    let mut has_out = Vec::with_capacity(n);
    let mut coarse: Vec<C64> = Vec::new();
    for i in 0..n {
        let (_, to) = comb.arcs[i];
        let (next_from, _) = comb.arcs[(i + 1) % n];
        let r_in = tracer.ray(to, level, f64::INFINITY)?;
        coarse.extend(r_in.points.iter().copied());
        if next_from != to {
            let r = tracer.ray(next_from, level, f64::INFINITY)?;
            let gap = (r.landing - r_in.landing).norm();
            let scale = 1.0 + r.landing.norm();
            if gap > 1e-7 * scale {
                return Err(Error::Combinatorics(format!(
                    "rays {to} and {next_from} land {gap:e} apart; they should share a landing point"
                )));
            }
            coarse.extend(r.points.iter().copied());
        }
        has_out.push(next_from != to);
    }
    let diam = geometry::diameter(&coarse).max(f64::MIN_POSITIVE);
    let h = diam / SPACING_DIVISOR;
    let mut arcs = Vec::with_capacity(3 * n);
    for i in 0..n {
        let (from, to) = comb.arcs[i];
        let (next_from, _) = comb.arcs[(i + 1) % n];
        let eq = tracer.equipotential(level, from, to, h)?;
        arcs.push(BoundaryArc {
            kind: ArcKind::Equipotential,
            angles: vec![from, to],
            potentials: vec![level],
            points: eq,
        });
        let r_in = tracer.ray(to, level, h)?;
        let landing = r_in.landing;
        arcs.push(BoundaryArc {
            kind: ArcKind::Ray,
            angles: vec![to],
            potentials: vec![level, 0.0],
            points: r_in.points,
        });
        if has_out[i] {
            let r_out = tracer.ray(next_from, level, h)?;
            let mut pts = r_out.points;
            *pts.last_mut().expect("non-empty") = landing;
            pts.reverse();
            arcs.push(BoundaryArc {
                kind: ArcKind::Ray,
                angles: vec![next_from],
                potentials: vec![0.0, level],
                points: pts,
            });
        }
    }
    let piece = PuzzlePiece::from_arcs(depth, label, comb.clone(), arcs);
    if piece.signed_area() <= 0.0 {
        return Err(Error::Combinatorics(format!(
            "traced boundary of {label} is not counterclockwise"
        )));
    }
    Ok(piece)
}
