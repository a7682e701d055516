//! Parapuzzle pieces `P(n)` and `Q(n)`: parameter-plane pieces bounded by the parameter
//! rays and equipotential of the same angles and level as the dynamical pieces they mirror.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::rays::{continue_parameter_equipotential, misiurewicz_landing, parabolic_landing, parameter_equipotential, ParamStepper};
use crate::error::{Error, Result};
use crate::puzzle::{arc_span, realize_with, BoundaryTracer, Combinatorics, PieceLabel, PrincipalNest, PuzzlePiece, RayArc};
use crate::quaddyn::{AnglePoint, ExternalAngle, Profile};

/// Potential halvings traced below the equipotential before the landing parameter is
/// found by Newton.
const FLOOR_HALVINGS: i32 = 10;
/// Further halvings allowed while the last gap to the landing parameter exceeds the spacing.
const EXTRA_HALVINGS: i32 = 20;

pub(crate) struct ParamTracer<'a> {
    pub profile: &'a Profile,
}

impl ParamTracer<'_> {
    fn ray_arc(&self, theta: ExternalAngle, level: f64, h: f64) -> Result<RayArc> {
        let ap = AnglePoint::exact(theta);
        let mut s = ParamStepper::new(ap, self.profile);
        if level >= s.g {
            return Err(Error::Precondition(format!(
                "parameter piece level {level} is above the tracing potential {}",
                s.g
            )));
        }
        s.descend(level, |_, _| {})?;
        let mut points = vec![s.c];
        let mut potentials = vec![s.g];
        let floor = level * (-FLOOR_HALVINGS as f64).exp2();
        s.descend(floor, |c, g| {
            points.push(c);
            potentials.push(g);
        })?;
        let landing_at = |c: C64| -> Result<C64> {
            if theta.preperiod_period().0 == 0 {
                parabolic_landing(theta)
            } else {
                misiurewicz_landing(theta, c, self.profile)
            }
        };
        let mut landing = landing_at(s.c)?;
        if h.is_finite() {
            // go deeper while the final chord is long; stop quietly where precision runs out
            let deepest = floor * (-EXTRA_HALVINGS as f64).exp2();
            while (s.c - landing).norm() > h && s.g > deepest {
                let next = s.g / 2.0;
                let mut trial = ParamStepper::at(ap, self.profile, s.c, s.g);
                if trial.step_to(next).is_err() {
                    break;
                }
                s = trial;
                points.push(s.c);
                potentials.push(s.g);
            }
            landing = landing_at(s.c).unwrap_or(landing);
            let (p, g) = refine(ap, &points, &potentials, h, self.profile)?;
            points = p;
            potentials = g;
        }
        points.push(landing);
        potentials.push(0.0);
        Ok(RayArc {
            points,
            potentials,
            landing,
        })
    }
}

/// Insert ray points until consecutive gaps are at most `h`.
fn refine(ap: AnglePoint, points: &[C64], pots: &[f64], h: f64, profile: &Profile) -> Result<(Vec<C64>, Vec<f64>)> {
    let mut out = vec![points[0]];
    let mut out_g = vec![pots[0]];
    for i in 0..points.len() - 1 {
        let mut stack = vec![(points[i], pots[i], points[i + 1], pots[i + 1], 0u32)];
        while let Some((a, ga, b, gb, depth)) = stack.pop() {
            if (b - a).norm() <= h || depth > 24 {
                out.push(b);
                out_g.push(gb);
                continue;
            }
            let gm = (ga * gb).sqrt();
            let mut s = ParamStepper::at(ap, profile, a, ga);
            s.step_to(gm)?;
            stack.push((s.c, gm, b, gb, depth + 1));
            stack.push((a, ga, s.c, gm, depth + 1));
        }
    }
    Ok((out, out_g))
}

impl BoundaryTracer for ParamTracer<'_> {
    fn ray(&self, theta: ExternalAngle, level: f64, h: f64) -> Result<RayArc> {
        self.ray_arc(theta, level, h)
    }

    fn equipotential(&self, level: f64, from: ExternalAngle, to: ExternalAngle, h: f64) -> Result<Vec<C64>> {
        let (n, d) = arc_span(&from, &to);
        let span = n as f64 / d as f64;
        let n0 = 32;
        let mut offsets: Vec<f64> = (0..=n0).map(|i| span * i as f64 / n0 as f64).collect();
        let mut pts = parameter_equipotential(level, from, &offsets, self.profile)?;
        for _ in 0..40 {
            let mut new_off = Vec::with_capacity(offsets.len() * 2);
            let mut new_pts = Vec::with_capacity(offsets.len() * 2);
            let mut changed = false;
            for i in 0..offsets.len() {
                new_off.push(offsets[i]);
                new_pts.push(pts[i]);
                if i + 1 < offsets.len() && (pts[i + 1] - pts[i]).norm() > h {
                    let mid = 0.5 * (offsets[i] + offsets[i + 1]);
                    let c = continue_parameter_equipotential(level, from, offsets[i], pts[i], mid, self.profile)?;
                    new_off.push(mid);
                    new_pts.push(c);
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
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParaKind {
    P,
    Q,
}

/// A parameter-plane piece. Serializes as the underlying piece plus `n` and `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParaPiece {
    pub n: usize,
    pub kind: ParaKind,
    #[serde(flatten)]
    pub piece: PuzzlePiece,
}

impl ParaPiece {
    pub fn from_json(s: &str) -> Result<Self> {
        let mut p: ParaPiece = serde_json::from_str(s)?;
        p.piece.rebuild_boundary();
        Ok(p)
    }

    pub fn contains(&self, c: C64) -> Result<bool> {
        self.piece.contains(c)
    }

    pub fn contains_strictly(&self, c: C64) -> bool {
        self.piece.contains_strictly(c)
    }

    pub fn boundary(&self) -> &[C64] {
        self.piece.boundary()
    }

    /// See [`PuzzlePiece::nesting_defect`].
    pub fn nesting_defect(&self, outer: &ParaPiece) -> f64 {
        self.piece.nesting_defect(&outer.piece)
    }
}

/// Combinatorics of `P(n)` (image of `V(n,0)`) or `Q(n)` (image of `W(n)`).
pub fn parapiece_combinatorics(n: usize, kind: ParaKind, nest: &PrincipalNest) -> Result<Combinatorics> {
    let lv = nest
        .levels
        .get(n)
        .ok_or_else(|| Error::Precondition(format!("reference nest has no level {n}")))?;
    match kind {
        ParaKind::P => lv.central.combinatorics.image(),
        ParaKind::Q => lv
            .pre_central
            .as_ref()
            .ok_or_else(|| {
                Error::Precondition(format!(
                    "reference nest has no off-critical data for Q({n}); Q is defined from level 2"
                ))
            })?
            .combinatorics
            .image(),
    }
}

/// Trace `P(n)` or `Q(n)` from the angles of the reference nest.
pub fn build_parapiece(n: usize, kind: ParaKind, nest: &PrincipalNest, profile: &Profile) -> Result<ParaPiece> {
    let comb = parapiece_combinatorics(n, kind, nest)?;
    let depth = match kind {
        ParaKind::P => nest.levels[n].central.depth,
        ParaKind::Q => nest.levels[n].pre_central.as_ref().map_or(0, |p| p.depth),
    }
    .saturating_sub(1);
    let label = match kind {
        ParaKind::P => PieceLabel::ParaP(n),
        ParaKind::Q => PieceLabel::ParaQ(n),
    };
    let piece = realize_with(&ParamTracer { profile }, &comb, depth, label)?;
    Ok(ParaPiece { n, kind, piece })
}
