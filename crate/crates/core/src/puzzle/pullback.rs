//! Pulling pieces back along orbits.
//!
//! Each step pulls the current boundary polyline back through square-root branches
//! chosen by continuity, decides from that curve whether the step is a double cover,
//! and fixes the angles of univalent preimages by testing traced ray points against it.

use num_complex::Complex64 as C64;

use super::{arc_span, realize, Combinatorics, PieceLabel, PuzzlePiece};
use crate::error::{Error, Result};
use crate::geometry;
use crate::quaddyn::{ray_point, AnglePoint, Profile, QuadraticMap};

/// Ambiguity ratio above which a segment is subdivided before choosing a branch.
const AMBIGUITY: f64 = 0.5;
const MAX_AMBIGUITY_SPLITS: u32 = 12;
const MAX_SPACING_SPLITS: u32 = 24;

/// One piece of a pullback chain: the piece containing the `j`-th orbit point.
#[derive(Clone, Debug)]
pub struct ChainStep {
    pub comb: Combinatorics,
    pub curve: Vec<C64>,
    pub point: C64,
    /// Whether the map from this piece to the next one is a double cover.
    pub critical: bool,
}

struct Walker<'a> {
    map: &'a QuadraticMap,
    h: f64,
    v: C64,
    out: Vec<C64>,
}

impl Walker<'_> {
    fn segment(&mut self, a: C64, b: C64, depth: u32) -> Result<()> {
        let r = (b - self.map.c).sqrt();
        let (d1, d2) = ((r - self.v).norm(), (-r - self.v).norm());
        let (p, near, far) = if d1 <= d2 { (r, d1, d2) } else { (-r, d2, d1) };
        let ambiguous = far == 0.0 || near / far > AMBIGUITY;
        if ambiguous && depth >= MAX_AMBIGUITY_SPLITS {
            return Err(Error::BranchPinch { location: b });
        }
        if ambiguous || (near > self.h && depth < MAX_SPACING_SPLITS) {
            let m = 0.5 * (a + b);
            self.segment(a, m, depth + 1)?;
            return self.segment(m, b, depth + 1);
        }
        self.v = p;
        self.out.push(p);
        Ok(())
    }
}

/// Preimage of a closed polyline under `f`, tracked by continuity from the branch of
/// `curve[0]` nearest `first`. Returns the curve and whether it took two turns to close
/// (the curve winds around the critical value).
pub fn pull_back_curve(map: &QuadraticMap, curve: &[C64], h: f64, first: C64) -> Result<(Vec<C64>, bool)> {
    let n = curve.len();
    if n < 3 {
        return Err(Error::Precondition("a closed curve needs at least 3 vertices".into()));
    }
    let r0 = (curve[0] - map.c).sqrt();
    let v0 = if (r0 - first).norm() <= (-r0 - first).norm() { r0 } else { -r0 };
    let mut w = Walker {
        map,
        h,
        v: v0,
        out: vec![v0],
    };
    for round in 0..2 {
        for i in 1..=n {
            w.segment(curve[i - 1], curve[i % n], 0)?;
        }
        let end = w.out.pop().expect("walker emits points");
        let tol = 1e-9 * (1.0 + v0.norm());
        if (end - v0).norm() <= tol {
            return Ok((w.out, round == 1));
        }
        if round == 0 && (end + v0).norm() <= tol {
            w.out.push(end);
            continue;
        }
        break;
    }
    Err(Error::BranchPinch { location: curve[0] })
}

fn pull_back_dense(map: &QuadraticMap, curve: &[C64], first: C64) -> Result<(Vec<C64>, bool)> {
    let (coarse, _) = pull_back_curve(map, curve, f64::INFINITY, first)?;
    let h = geometry::diameter(&coarse) / 512.0;
    pull_back_curve(map, curve, h, coarse[0])
}

/// Pull `top` back `iterates` times along the orbit of `basepoint`.
/// Entry `j` of the result is the piece containing `f^j(basepoint)`; the last entry is
/// `top` itself.
pub fn pullback_chain(
    map: &QuadraticMap,
    top: &PuzzlePiece,
    iterates: usize,
    basepoint: C64,
    profile: &Profile,
) -> Result<Vec<ChainStep>> {
    let mut orbit = Vec::with_capacity(iterates + 1);
    let mut z = basepoint;
    orbit.push(z);
    for _ in 0..iterates {
        z = map.forward(z);
        orbit.push(z);
    }
    if !top.contains(orbit[iterates])? {
        return Err(Error::Precondition(format!(
            "f^{iterates}(basepoint) = {} is not inside the piece",
            orbit[iterates]
        )));
    }
    let mut steps = vec![ChainStep {
        comb: top.combinatorics.clone(),
        curve: top.boundary().to_vec(),
        point: orbit[iterates],
        critical: false,
    }];
    for j in (0..iterates).rev() {
        let cur = steps.last().expect("chain starts with the top piece");
        let band = 1e-12 * geometry::diameter(&cur.curve);
        let critical = match geometry::winding_number(&cur.curve, map.c, band) {
            Ok(w) => w != 0,
            Err(Error::NearPassage { .. }) => return Err(Error::BranchPinch { location: map.c }),
            Err(e) => return Err(e),
        };
        let (mut curve, two_turns) = pull_back_dense(map, &cur.curve, orbit[j])?;
        if two_turns != critical {
            return Err(Error::Combinatorics(format!(
                "pulled-back boundary closes after {} turn(s) but the critical value is {} the piece",
                if two_turns { 2 } else { 1 },
                if critical { "inside" } else { "outside" }
            )));
        }
        if !critical && !geometry::contains(&curve, orbit[j]) {
            for p in curve.iter_mut() {
                *p = -*p;
            }
        }
        if !geometry::contains(&curve, orbit[j]) {
            return Err(Error::Combinatorics(format!(
                "orbit point {} is not inside its pulled-back piece",
                orbit[j]
            )));
        }
        let comb = if critical {
            cur.comb.preimage_double()?
        } else {
            let upper = select_branches(map, &cur.comb, &curve, profile)?;
            cur.comb.preimage_branch(&upper)?
        };
        let n = steps.len();
        steps[n - 1].critical = critical;
        steps.push(ChainStep {
            comb,
            curve,
            point: orbit[j],
            critical: false,
        });
    }
    steps.reverse();
    Ok(steps)
}

/// For each arc, whether the preimage arc inside `curve` is the upper half.
fn select_branches(map: &QuadraticMap, comb: &Combinatorics, curve: &[C64], profile: &Profile) -> Result<Vec<bool>> {
    let potential = 0.75 * comb.level / 2.0;
    comb.arcs
        .iter()
        .map(|(from, to)| {
            let (n, d) = arc_span(from, to);
            let quarter = n as f64 / d as f64 / 4.0;
            let ap = AnglePoint::new(from.half(false)?, quarter);
            let q = ray_point(map, ap, potential, profile)?;
            let lower = geometry::contains(curve, q);
            let upper = geometry::contains(curve, -q);
            if lower == upper {
                return Err(Error::Combinatorics(format!(
                    "cannot place the preimage of arc {from}..{to} in the pulled-back piece"
                )));
            }
            Ok(upper)
        })
        .collect()
}

/// The component of `f^{-iterates}(piece)` containing `basepoint`.
pub fn pullback_piece(
    map: &QuadraticMap,
    piece: &PuzzlePiece,
    iterates: usize,
    basepoint: C64,
    profile: &Profile,
) -> Result<PuzzlePiece> {
    if iterates == 0 {
        return Ok(piece.clone());
    }
    let chain = pullback_chain(map, piece, iterates, basepoint, profile)?;
    finish_chain(map, piece.depth + iterates, &chain[0], profile)
}

/// Trace the bottom piece of a chain and cross-check it against the pulled-back curve.
pub(crate) fn finish_chain(map: &QuadraticMap, depth: usize, bottom: &ChainStep, profile: &Profile) -> Result<PuzzlePiece> {
    let piece = realize(map, &bottom.comb, depth, PieceLabel::Generic, profile)?;
    let diam = piece.diameter();
    let index = geometry::PolylineIndex::new(piece.boundary());
    let worst = bottom
        .curve
        .iter()
        .map(|&p| index.distance(p))
        .fold(0.0, f64::max);
    if worst > 0.02 * diam {
        return Err(Error::Combinatorics(format!(
            "traced boundary and pulled-back boundary differ by {worst:e} (diameter {diam:e})"
        )));
    }
    Ok(piece)
}
