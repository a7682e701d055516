//! Yoccoz puzzle pieces and the principal nest around the critical point.
//!
//! A piece is stored twice over: as [`Combinatorics`] (the equipotential level and the
//! counterclockwise equipotential arcs, from which every boundary ray follows) and as a
//! realized polyline whose arcs are traced directly from the angles.

mod fib;
mod nest;
mod pullback;
mod realize;

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry;
use crate::quaddyn::{cmp_fraction, fixed_points, ExternalAngle, Profile, QuadraticMap};

pub use fib::{check_fibonacci_combinatorics, fibonacci, fibonacci_violation, FibonacciSeq};
pub(crate) use fib::closest_return_violation;
pub use nest::{
    build_principal_nest, first_return, fit_quadratic_offset, rescaled_return_map, NestChecks, NestLevel, Normalization,
    PrincipalNest, RescaledReturnMap,
};
pub use pullback::{pull_back_curve, pullback_chain, pullback_piece, ChainStep};
pub use realize::realize;
pub(crate) use realize::{realize_with, BoundaryTracer, RayArc};

/// Default Green's value of the equipotential cutting the initial puzzle.
pub const DEFAULT_EQUIP_LEVEL: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcKind {
    Ray,
    Equipotential,
}

/// One boundary arc. Rays carry `[angle]` and `[top, bottom]` potentials (bottom is 0 at
/// the landing point); equipotential arcs carry `[from, to]` and `[level]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryArc {
    pub kind: ArcKind,
    pub angles: Vec<ExternalAngle>,
    pub potentials: Vec<f64>,
    #[serde(with = "crate::points::vec")]
    pub points: Vec<C64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PieceLabel {
    Central(usize),
    OffCritical(usize),
    Tilde(usize),
    /// Parameter piece mirroring `f(V(n,0))`.
    ParaP(usize),
    /// Parameter piece mirroring `f(W(n))`.
    ParaQ(usize),
    Generic,
}

impl fmt::Display for PieceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PieceLabel::Central(n) => write!(f, "V({n},0)"),
            PieceLabel::OffCritical(n) => write!(f, "V({n},1)"),
            PieceLabel::Tilde(n) => write!(f, "~V({n},1)"),
            PieceLabel::ParaP(n) => write!(f, "P({n})"),
            PieceLabel::ParaQ(n) => write!(f, "Q({n})"),
            PieceLabel::Generic => write!(f, "generic"),
        }
    }
}

impl std::str::FromStr for PieceLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "generic" {
            return Ok(PieceLabel::Generic);
        }
        let bad = || Error::Serde(format!("unknown piece label {s:?}"));
        for (prefix, make) in [("P(", PieceLabel::ParaP as fn(usize) -> PieceLabel), ("Q(", PieceLabel::ParaQ)] {
            if let Some(inner) = s.strip_prefix(prefix).and_then(|r| r.strip_suffix(')')) {
                return inner.trim().parse().map(make).map_err(|_| bad());
            }
        }
        let (tilde, rest) = match s.strip_prefix('~') {
            Some(r) => (true, r),
            None => (false, s),
        };
        let inner = rest
            .strip_prefix("V(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let (n, k) = inner.split_once(',').ok_or_else(bad)?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        match (tilde, k.trim()) {
            (false, "0") => Ok(PieceLabel::Central(n)),
            (false, "1") => Ok(PieceLabel::OffCritical(n)),
            (true, "1") => Ok(PieceLabel::Tilde(n)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for PieceLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PieceLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Equipotential level plus the counterclockwise equipotential arcs `(from, to)` of a
/// piece, sorted by `from`. Between arc `i` and arc `i + 1` the boundary runs down the
/// ray `arcs[i].1` and back up the ray `arcs[i + 1].0`, which land together.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Combinatorics {
    pub level: f64,
    pub arcs: Vec<(ExternalAngle, ExternalAngle)>,
}

/// Counterclockwise span of an arc as an exact fraction; a closed arc is a full turn.
pub(crate) fn arc_span(from: &ExternalAngle, to: &ExternalAngle) -> (u128, u128) {
    let (n, d) = from.ccw_span_to(to);
    if n == 0 {
        (1, 1)
    } else {
        (n, d)
    }
}

fn half_arc(arc: &(ExternalAngle, ExternalAngle), upper: bool) -> Result<(ExternalAngle, ExternalAngle)> {
    let (n, d) = arc_span(&arc.0, &arc.1);
    let from = arc.0.half(upper)?;
    let d2 = d
        .checked_mul(2)
        .ok_or_else(|| Error::AngleBudget("denominator overflow".into()))?;
    Ok((from, from.add_turns(n, d2)))
}

impl Combinatorics {
    pub fn new(level: f64, mut arcs: Vec<(ExternalAngle, ExternalAngle)>) -> Result<Self> {
        if !(level > 0.0) {
            return Err(Error::Precondition("equipotential level must be positive".into()));
        }
        if arcs.is_empty() {
            return Err(Error::EmptySet);
        }
        arcs.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(Self { level, arcs })
    }

    /// The connected preimage under a degree-two map (critical value inside).
    pub fn preimage_double(&self) -> Result<Self> {
        let mut arcs = Vec::with_capacity(2 * self.arcs.len());
        for a in &self.arcs {
            arcs.push(half_arc(a, false)?);
            arcs.push(half_arc(a, true)?);
        }
        Self::new(self.level / 2.0, arcs)
    }

    /// One univalent preimage; `upper[i]` picks `θ/2 + 1/2` for arc `i`.
    pub fn preimage_branch(&self, upper: &[bool]) -> Result<Self> {
        let arcs = self
            .arcs
            .iter()
            .zip(upper)
            .map(|(a, &u)| half_arc(a, u))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.level / 2.0, arcs)
    }

    /// Combinatorics of the image under `f`. Arcs that coincide after doubling (the two
    /// halves of a symmetric piece) are merged.
    pub fn image(&self) -> Result<Self> {
        let mut arcs: Vec<(ExternalAngle, ExternalAngle)> = Vec::new();
        for a in &self.arcs {
            let (n, d) = arc_span(&a.0, &a.1);
            if 2 * n >= d {
                return Err(Error::Combinatorics(format!(
                    "arc {}..{} spans half a turn or more; its image is not a piece",
                    a.0, a.1
                )));
            }
            let im = (a.0.double(), a.1.double());
            if !arcs.contains(&im) {
                arcs.push(im);
            }
        }
        Self::new(self.level * 2.0, arcs)
    }

    pub fn ray_angles(&self) -> Vec<ExternalAngle> {
        let mut v: Vec<ExternalAngle> = self.arcs.iter().flat_map(|a| [a.0, a.1]).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Pairs of rays that land at a common point, in boundary order.
    pub fn landing_pairs(&self) -> Vec<(ExternalAngle, ExternalAngle)> {
        let n = self.arcs.len();
        (0..n).map(|i| (self.arcs[i].1, self.arcs[(i + 1) % n].0)).collect()
    }

    pub fn contains_angle(&self, theta: &ExternalAngle) -> bool {
        self.arcs.iter().any(|a| {
            let (n, d) = arc_span(&a.0, &a.1);
            let (m, e) = a.0.ccw_span_to(theta);
            cmp_fraction(m, e, n, d) != std::cmp::Ordering::Greater
        })
    }
}

/// A puzzle piece: depth (number of pullbacks from the initial puzzle), label, the
/// combinatorial data and the traced boundary arcs in counterclockwise order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PuzzlePiece {
    pub depth: usize,
    pub label: PieceLabel,
    pub combinatorics: Combinatorics,
    pub arcs: Vec<BoundaryArc>,
    #[serde(skip)]
    boundary: Vec<C64>,
}

impl PuzzlePiece {
    pub(crate) fn from_arcs(
        depth: usize,
        label: PieceLabel,
        combinatorics: Combinatorics,
        arcs: Vec<BoundaryArc>,
    ) -> Self {
        let mut p = Self {
            depth,
            label,
            combinatorics,
            arcs,
            boundary: Vec::new(),
        };
        p.rebuild_boundary();
        p
    }

    pub(crate) fn rebuild_boundary(&mut self) {
        let mut b: Vec<C64> = self.arcs.iter().flat_map(|a| a.points.iter().copied()).collect();
        let scale = geometry::diameter(&b).max(f64::MIN_POSITIVE);
        geometry::dedup_closed(&mut b, 1e-14 * scale);
        self.boundary = b;
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut p: PuzzlePiece = serde_json::from_str(s)?;
        p.rebuild_boundary();
        Ok(p)
    }

    pub fn with_label(mut self, label: PieceLabel) -> Self {
        self.label = label;
        self
    }

    /// Closed boundary polyline (last vertex joins the first).
    pub fn boundary(&self) -> &[C64] {
        &self.boundary
    }

    pub fn level(&self) -> f64 {
        self.combinatorics.level
    }

    pub fn diameter(&self) -> f64 {
        geometry::diameter(&self.boundary)
    }

    /// Winding-number containment with a boundary exclusion band of `1e-12 · diam`.
    pub fn contains(&self, z: C64) -> Result<bool> {
        let band = 1e-12 * self.diameter();
        Ok(geometry::winding_number(&self.boundary, z, band)? != 0)
    }

    /// Containment that treats points on the boundary band as outside.
    pub fn contains_strictly(&self, z: C64) -> bool {
        self.contains(z).unwrap_or(false)
    }

    pub fn signed_area(&self) -> f64 {
        geometry::signed_area(&self.boundary)
    }

    /// Largest distance, relative to the diameter of `outer`, from a boundary vertex of
    /// `self` outside `outer` to the boundary of `outer`. 0 when `self` lies inside;
    /// small positive values come from shared boundary arcs sampled differently.
    pub fn nesting_defect(&self, outer: &PuzzlePiece) -> f64 {
        let index = geometry::PolylineIndex::new(outer.boundary());
        let scale = outer.diameter().max(f64::MIN_POSITIVE);
        self.boundary
            .iter()
            .filter(|z| !outer.contains_strictly(**z))
            .map(|z| index.distance(*z) / scale)
            .fold(0.0, f64::max)
    }

    /// Largest gap between the end of one arc and the start of the next.
    pub fn closing_gap(&self) -> f64 {
        let n = self.arcs.len();
        (0..n)
            .map(|i| {
                let a = self.arcs[i].points.last().copied().unwrap_or_default();
                let b = self.arcs[(i + 1) % n].points.first().copied().unwrap_or_default();
                (a - b).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// The depth-0 pieces cut out by the rays 1/3 and 2/3 and the equipotential
/// `equip_level`; the piece containing 0 comes first and is labeled `V(0,0)`.
pub fn initial_puzzle(map: &QuadraticMap, equip_level: f64, profile: &Profile) -> Result<Vec<PuzzlePiece>> {
    if !(equip_level > 0.0) {
        return Err(Error::Precondition("equipotential level must be positive".into()));
    }
    let third = ExternalAngle::new(1, 3)?;
    let two_thirds = ExternalAngle::new(2, 3)?;
    let alpha = fixed_points(map).alpha;
    for theta in [third, two_thirds] {
        let landing = realize::landing_of(map, theta, profile)?;
        let tol = 1e-7 * (1.0 + alpha.norm());
        if (landing - alpha).norm() > tol {
            return Err(Error::Combinatorics(format!(
                "ray {theta} lands at {landing}, not at the alpha fixed point {alpha}; c = {} is outside the 1/2-wake",
                map.c
            )));
        }
    }
    let a = Combinatorics::new(equip_level, vec![(two_thirds, third)])?;
    let b = Combinatorics::new(equip_level, vec![(third, two_thirds)])?;
    let pa = realize(map, &a, 0, PieceLabel::Generic, profile)?;
    let pb = realize(map, &b, 0, PieceLabel::Generic, profile)?;
    let zero = C64::new(0.0, 0.0);
    let (central, other) = if pa.contains(zero)? { (pa, pb) } else { (pb, pa) };
    Ok(vec![central.with_label(PieceLabel::Central(0)), other])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ang(n: u128, d: u128) -> ExternalAngle {
        ExternalAngle::new(n, d).unwrap()
    }

    #[test]
    fn label_round_trip() {
        for l in [
            PieceLabel::Central(3),
            PieceLabel::OffCritical(2),
            PieceLabel::Tilde(4),
            PieceLabel::Generic,
        ] {
            assert_eq!(l.to_string().parse::<PieceLabel>().unwrap(), l);
        }
        assert!("V(1,2)".parse::<PieceLabel>().is_err());
    }

    #[test]
    fn halving_the_initial_central_arc() {
        let c = Combinatorics::new(1.0, vec![(ang(2, 3), ang(1, 3))]).unwrap();
        let d = c.preimage_double().unwrap();
        assert_eq!(d.arcs, vec![(ang(1, 3), ang(2, 3)), (ang(5, 6), ang(1, 6))]);
        assert_eq!(d.level, 0.5);
        let u = c.preimage_branch(&[true]).unwrap();
        assert_eq!(u.arcs, vec![(ang(5, 6), ang(1, 6))]);
        assert_eq!(
            d.landing_pairs(),
            vec![(ang(2, 3), ang(5, 6)), (ang(1, 6), ang(1, 3))]
        );
    }

    #[test]
    fn image_merges_symmetric_halves() {
        let c = Combinatorics::new(0.25, vec![(ang(1, 6), ang(1, 3)), (ang(2, 3), ang(5, 6))]).unwrap();
        let im = c.image().unwrap();
        assert_eq!(im.arcs, vec![(ang(1, 3), ang(2, 3))]);
        assert_eq!(im.level, 0.5);
        let whole = Combinatorics::new(1.0, vec![(ang(2, 3), ang(1, 3))]).unwrap();
        assert!(whole.image().is_err());
    }

    #[test]
    fn angle_membership() {
        let c = Combinatorics::new(1.0, vec![(ang(2, 3), ang(1, 3))]).unwrap();
        assert!(c.contains_angle(&ExternalAngle::ZERO));
        assert!(c.contains_angle(&ang(1, 4)));
        assert!(!c.contains_angle(&ang(1, 2)));
    }
}
