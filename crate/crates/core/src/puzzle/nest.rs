//! The principal nest `V(n,0)`, the off-critical pieces `V(n,1)` and `~V(n,1)`, and
//! rescaled return maps.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::pullback::{finish_chain, pullback_chain, ChainStep};
use super::{fibonacci, initial_puzzle, FibonacciSeq, PieceLabel, PuzzlePiece};
use crate::error::{Error, Result};
use crate::geometry;
use crate::quaddyn::{Profile, QuadraticMap};

#[derive(Clone, Debug)]
pub struct NestLevel {
    pub n: usize,
    pub central: PuzzlePiece,
    /// Iterate count of `g_n : V(n,0) -> V(n-1,0)`; 0 at level 0.
    pub return_iterate: usize,
    pub off_critical: Option<PuzzlePiece>,
    /// Iterate count of the return of `V(n,1)` to `V(n-1,0)`.
    pub off_return: Option<usize>,
    pub tilde: Option<PuzzlePiece>,
    /// `W(n)`: the component of `g_{n-1}^{-1}(V(n-1,1))` containing 0, between `V(n,0)`
    /// and `V(n-1,0)`. Its image under `f` mirrors the parameter piece `Q(n)`.
    pub pre_central: Option<PuzzlePiece>,
    pub(crate) central_chain: Vec<ChainStep>,
    pub(crate) off_chain: Vec<ChainStep>,
}

impl NestLevel {
    /// Total iterates from `V(n,0)` down to the initial puzzle.
    pub fn total_iterates(&self) -> usize {
        self.central.depth
    }
}

#[derive(Clone, Debug)]
pub struct PrincipalNest {
    pub c: C64,
    pub equip_level: f64,
    pub levels: Vec<NestLevel>,
    /// Both depth-0 pieces; the first is `V(0,0)`.
    pub initial: Vec<PuzzlePiece>,
    pub fibonacci: FibonacciSeq,
    pub diagnostics: Vec<String>,
    /// Set when construction stopped early for lack of precision.
    pub truncated: bool,
}

fn escape_error(level: usize, iterate: usize) -> Error {
    Error::NonRenormalizable {
        level,
        reason: format!("critical orbit escapes after {iterate} iterates"),
    }
}

/// Least `m >= 1` with `f^m(z) ∈ piece`.
fn first_entry(map: &QuadraticMap, piece: &PuzzlePiece, z: C64, cap: usize, level: usize) -> Result<usize> {
    let r = map.default_escape_radius();
    let mut w = z;
    for m in 1..=cap {
        w = map.forward(w);
        if w.norm() > r {
            return Err(escape_error(level, m));
        }
        if piece.contains_strictly(w) {
            return Ok(m);
        }
    }
    Err(Error::NonRenormalizable {
        level,
        reason: format!("no return within {cap} iterates"),
    })
}

fn return_cap(level: usize) -> usize {
    4 * fibonacci(level + 3) as usize + 16
}

/// Least `m >= 1` with `f^m(0) ∈ V(level,0)`.
pub fn first_return(map: &QuadraticMap, nest: &PrincipalNest, level: usize) -> Result<usize> {
    let piece = &nest
        .levels
        .get(level)
        .ok_or_else(|| Error::Precondition(format!("nest has no level {level}")))?
        .central;
    first_entry(map, piece, C64::new(0.0, 0.0), return_cap(level), level)
}

fn is_precision_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::RayStall { .. } | Error::AngleBudget(_) | Error::BranchPinch { .. } | Error::Newton(_) | Error::NearPassage { .. }
    )
}

/// Build the principal nest to `depth` levels with equipotential `equip_level`.
pub fn build_principal_nest(
    map: &QuadraticMap,
    depth: usize,
    equip_level: f64,
    profile: &Profile,
) -> Result<PrincipalNest> {
    let initial = initial_puzzle(map, equip_level, profile)?;
    let mut nest = PrincipalNest {
        c: map.c,
        equip_level,
        levels: vec![NestLevel {
            n: 0,
            central: initial[0].clone(),
            return_iterate: 0,
            off_critical: None,
            off_return: None,
            tilde: None,
            pre_central: None,
            central_chain: Vec::new(),
            off_chain: Vec::new(),
        }],
        initial,
        fibonacci: FibonacciSeq::up_to(depth + 2),
        diagnostics: Vec::new(),
        truncated: false,
    };
    for n in 1..=depth {
        match build_level(map, &mut nest, n, profile) {
            Ok(level) => nest.levels.push(level),
            Err(e) if n > 1 && is_precision_failure(&e) => {
                nest.diagnostics
                    .push(format!("nest truncated at level {}: {e}", n - 1));
                nest.truncated = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(nest)
}

fn build_level(map: &QuadraticMap, nest: &mut PrincipalNest, n: usize, profile: &Profile) -> Result<NestLevel> {
    let zero = C64::new(0.0, 0.0);
    let prev = nest.levels[n - 1].central.clone();
    let m = first_return(map, nest, n - 1)?;
    let expected = fibonacci(n + 1) as usize;
    if m != expected {
        return Err(Error::NonRenormalizable {
            level: n,
            reason: format!("first return to V({},0) takes {m} iterates, not {expected}", n - 1),
        });
    }
    let central_chain = pullback_chain(map, &prev, m, zero, profile)?;
    let central = finish_chain(map, prev.depth + m, &central_chain[0], profile)?
        .with_label(PieceLabel::Central(n));
    if !central.contains_strictly(zero) {
        return Err(Error::Combinatorics(format!("V({n},0) does not contain 0")));
    }
    let x = map.iterate(zero, m);
    let mut level = NestLevel {
        n,
        central,
        return_iterate: m,
        off_critical: None,
        off_return: None,
        tilde: None,
        pre_central: None,
        central_chain,
        off_chain: Vec::new(),
    };
    if let Some(off) = &nest.levels[n - 1].off_critical {
        let l = nest.levels[n - 1].return_iterate;
        if off.contains_strictly(map.iterate(zero, l)) {
            let w = pullback_chain(map, off, l, zero, profile)?;
            level.pre_central = Some(finish_chain(map, off.depth + l, &w[0], profile)?);
        } else {
            nest.diagnostics
                .push(format!("level {n}: g_{}(0) is not in V({},1)", n - 1, n - 1));
        }
    }
    if level.central.contains_strictly(x) {
        nest.diagnostics
            .push(format!("level {n}: g_{n}(0) stays in V({n},0); no off-critical piece"));
        return Ok(level);
    }
    let l = first_entry(map, &prev, x, return_cap(n), n)?;
    if l as u128 != fibonacci(n) {
        nest.diagnostics
            .push(format!("level {n}: off-critical return takes {l} iterates, expected {}", fibonacci(n)));
    }
    let off_chain = pullback_chain(map, &prev, l, x, profile)?;
    let off = finish_chain(map, prev.depth + l, &off_chain[0], profile)?
        .with_label(PieceLabel::OffCritical(n));
    level.off_critical = Some(off);
    level.off_return = Some(l);
    level.off_chain = off_chain;
    if level.central.contains_strictly(map.iterate(x, l)) {
        let chain = pullback_chain(map, &level.central, l, x, profile)?;
        let tilde = finish_chain(map, level.central.depth + l, &chain[0], profile)?
            .with_label(PieceLabel::Tilde(n));
        level.tilde = Some(tilde);
    } else {
        nest.diagnostics
            .push(format!("level {n}: off-critical orbit does not enter V({n},0) after {l} iterates"));
    }
    Ok(level)
}

/// Result of sampled validity checks on a nest.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct NestChecks {
    /// `(n, min distance from ∂V(n,0) to ∂V(n-1,0), all of ∂V(n,0) inside V(n-1,0))`.
    pub nesting: Vec<(usize, f64, bool)>,
    pub fibonacci_returns: bool,
    /// `(n, winding of g_n(∂V(n,0)) about a generic point, preimage count)`.
    pub central_degree: Vec<(usize, i64, usize)>,
    pub off_critical_degree: Vec<(usize, i64, usize)>,
    /// `(n, max |g_n - g_{n-2}∘g_{n-1}|, fraction of samples with g_{n-1}(z) ∈ V(n-1,1))`.
    pub composition: Vec<(usize, f64, f64)>,
    /// `(n, max distance of g_n(∂V(n,0)) from ∂V(n-1,0) relative to its diameter)`.
    pub boundary_map: Vec<(usize, f64)>,
    /// `(n, relative error of the equipotential level against E / 2^depth)`.
    pub levels: Vec<(usize, f64)>,
}

impl NestChecks {
    /// Strict nesting is required from level 2 on: `∂V(1,0)` shares the alpha fixed
    /// point with `∂V(0,0)`.
    pub fn passed(&self) -> bool {
        self.nesting.iter().all(|&(n, d, inside)| n < 2 || (inside && d > 0.0))
            && self.fibonacci_returns
            && self.central_degree.iter().all(|&(_, w, k)| w == 2 && k == 2)
            && self.off_critical_degree.iter().all(|&(_, w, k)| w == 1 && k == 1)
            && self.composition.iter().all(|&(_, d, f)| d < 1e-9 && f == 1.0)
            && self.boundary_map.iter().all(|&(_, d)| d < 0.02)
            && self.levels.iter().all(|&(_, e)| e < 1e-6)
    }
}

/// Interior sample points of a piece on a `k × k` grid over its bounding box.
pub(crate) fn interior_samples(piece: &PuzzlePiece, k: usize) -> Vec<C64> {
    let (lo, hi) = geometry::bounding_box(piece.boundary());
    let diam = piece.diameter();
    let index = geometry::PolylineIndex::new(piece.boundary());
    let mut out = Vec::new();
    for i in 0..k {
        for j in 0..k {
            let z = C64::new(
                lo.re + (hi.re - lo.re) * (i as f64 + 0.5) / k as f64,
                lo.im + (hi.im - lo.im) * (j as f64 + 0.5) / k as f64,
            );
            if geometry::contains(piece.boundary(), z) && index.distance(z) > 0.01 * diam
            {
                out.push(z);
            }
        }
    }
    out
}

/// A point well inside `piece`, away from `avoid`.
fn generic_point(piece: &PuzzlePiece, avoid: &[C64]) -> Option<C64> {
    let diam = piece.diameter();
    let index = geometry::PolylineIndex::new(piece.boundary());
    interior_samples(piece, 23).into_iter().find(|&z| {
        index.distance(z) > 0.05 * diam
            && avoid.iter().all(|a| (z - a).norm() > 0.05 * diam)
    })
}

/// Number of points of the chain's bottom piece mapping to `y` (in the top piece).
pub(crate) fn count_preimages(map: &QuadraticMap, chain: &[ChainStep], y: C64) -> Vec<C64> {
    let mut pts = vec![y];
    for step in chain.iter().rev().skip(1) {
        let mut next = Vec::new();
        for p in &pts {
            for q in map.preimages(*p) {
                if geometry::contains(&step.curve, q) {
                    next.push(q);
                }
            }
        }
        pts = next;
    }
    pts
}

fn degree_of(map: &QuadraticMap, piece: &PuzzlePiece, target: &PuzzlePiece, chain: &[ChainStep], iterates: usize) -> Result<(i64, usize)> {
    let crit_value = map.iterate(C64::new(0.0, 0.0), iterates);
    let y = generic_point(target, &[crit_value]).ok_or_else(|| {
        Error::Nesting(format!("no generic interior point in {}", target.label))
    })?;
    let image: Vec<C64> = piece.boundary().iter().map(|&z| map.iterate(z, iterates)).collect();
    let w = geometry::winding_number(&image, y, 0.0)?;
    let count = count_preimages(map, chain, y)
        .into_iter()
        .filter(|&z| piece.contains_strictly(z))
        .count();
    Ok((w, count))
}

impl PrincipalNest {
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn central(&self, n: usize) -> Option<&PuzzlePiece> {
        self.levels.get(n).map(|l| &l.central)
    }

    pub fn return_iterates(&self) -> Vec<usize> {
        self.levels.iter().skip(1).map(|l| l.return_iterate).collect()
    }

    pub fn map(&self) -> QuadraticMap {
        QuadraticMap { c: self.c }
    }

    /// Sampled validity checks: nesting, Fibonacci returns, degrees, composition,
    /// boundary mapping and equipotential levels.
    pub fn check(&self) -> Result<NestChecks> {
        let map = self.map();
        let mut out = NestChecks {
            fibonacci_returns: self
                .levels
                .iter()
                .skip(1)
                .all(|l| l.return_iterate as u128 == fibonacci(l.n + 1)),
            ..Default::default()
        };
        for lv in &self.levels {
            let n = lv.n;
            let expected = self.equip_level / (lv.central.depth as f64).exp2();
            out.levels.push((n, (lv.central.level() - expected).abs() / expected));
            if n == 0 {
                continue;
            }
            let prev = &self.levels[n - 1].central;
            let sep = geometry::polyline_separation(lv.central.boundary(), prev.boundary());
            // disjoint Jordan curves: one vertex decides
            let inside = sep > 0.0 && prev.contains_strictly(lv.central.boundary()[0]);
            out.nesting.push((n, sep, inside));
            let (w, k) = degree_of(&map, &lv.central, prev, &lv.central_chain, lv.return_iterate)?;
            out.central_degree.push((n, w, k));
            let image: Vec<C64> = lv
                .central
                .boundary()
                .iter()
                .map(|&z| map.iterate(z, lv.return_iterate))
                .collect();
            let index = geometry::PolylineIndex::new(prev.boundary());
            let worst = image
                .iter()
                .map(|&z| index.distance(z))
                .fold(0.0, f64::max);
            out.boundary_map.push((n, worst / prev.diameter()));
            if let (Some(off), Some(l)) = (&lv.off_critical, lv.off_return) {
                let (w, k) = degree_of(&map, off, prev, &lv.off_chain, l)?;
                out.off_critical_degree.push((n, w, k));
            }
            if n >= 3 {
                out.composition.push(self.composition_check(n)?);
            }
        }
        Ok(out)
    }

    /// Compare `g_n` with `g_{n-2} ∘ g_{n-1}` on interior samples of `V(n,0)`.
    fn composition_check(&self, n: usize) -> Result<(usize, f64, f64)> {
        let map = self.map();
        let (a, b, c) = (
            self.levels[n].return_iterate,
            self.levels[n - 1].return_iterate,
            self.levels[n - 2].return_iterate,
        );
        let off = self.levels[n - 1]
            .off_critical
            .as_ref()
            .ok_or_else(|| Error::Nesting(format!("level {} has no off-critical piece", n - 1)))?;
        let samples = interior_samples(&self.levels[n].central, 17);
        if samples.is_empty() {
            return Err(Error::EmptySet);
        }
        let mut worst: f64 = 0.0;
        let mut hits = 0usize;
        for &z in &samples {
            let direct = map.iterate(z, a);
            let w = map.iterate(z, b);
            if off.contains_strictly(w) {
                hits += 1;
            }
            let composed = map.iterate(w, c);
            worst = worst.max((direct - composed).norm() / (1.0 + direct.norm()));
        }
        Ok((n, worst, hits as f64 / samples.len() as f64))
    }

    /// Points of `V(n,0)` mapped to 0 by `g_n`, Newton-polished.
    pub fn critical_preimages(&self, n: usize) -> Result<Vec<C64>> {
        let lv = self
            .levels
            .get(n)
            .filter(|l| l.n >= 1)
            .ok_or_else(|| Error::Precondition(format!("no return map at level {n}")))?;
        let map = self.map();
        let m = lv.return_iterate;
        let pts = count_preimages(&map, &lv.central_chain, C64::new(0.0, 0.0));
        pts.into_iter()
            .map(|p| polish_root(&map, m, p))
            .collect()
    }

    /// Real-axis boundary landing points `±b` of `V(n,0)`: the landing points of ray pairs
    /// `(θ, 1-θ)`, which are exchanged by complex conjugation.
    pub fn symmetric_landings(&self, n: usize) -> Result<Vec<C64>> {
        let piece = self
            .central(n)
            .ok_or_else(|| Error::Precondition(format!("nest has no level {n}")))?;
        let mut out = Vec::new();
        for arc in &piece.arcs {
            if arc.kind != super::ArcKind::Ray || arc.potentials[1] != 0.0 {
                continue;
            }
            let theta = arc.angles[0];
            let partner = piece
                .combinatorics
                .landing_pairs()
                .into_iter()
                .find(|p| p.0 == theta)
                .map(|p| p.1);
            if let Some(t2) = partner {
                let sum = theta.add_turns(t2.numerator(), t2.denominator());
                if sum == crate::quaddyn::ExternalAngle::ZERO {
                    out.push(*arc.points.last().expect("ray arcs are non-empty"));
                }
            }
        }
        if out.is_empty() {
            return Err(Error::Combinatorics(format!(
                "no conjugation-symmetric landing pair on the boundary of V({n},0)"
            )));
        }
        Ok(out)
    }

    /// Second-order coefficient of `g_{n}` at the critical point.
    pub fn return_curvature(&self, n: usize) -> C64 {
        let m = fibonacci(n + 1) as usize;
        let m = self.levels.get(n).map(|l| l.return_iterate).filter(|&r| r > 0).unwrap_or(m);
        second_order_coefficient(&self.map(), m)
    }

    /// `β_n`: the symmetric landing point of `∂V(n,0)` sent to the golden mean, signed so
    /// the rescaled `g_{n+1}` has a local minimum at 0.
    pub fn beta(&self, n: usize) -> Result<C64> {
        let cands = self.symmetric_landings(n)?;
        let a = self.return_curvature(n + 1);
        let phi = golden();
        let b = cands
            .iter()
            .copied()
            .max_by(|x, y| {
                let fx = (phi * a / x).re;
                let fy = (phi * a / y).re;
                fx.total_cmp(&fy)
            })
            .expect("non-empty");
        Ok(b)
    }
}

pub(crate) fn golden() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

/// `(f^m)''(0) / 2`.
pub(crate) fn second_order_coefficient(map: &QuadraticMap, m: usize) -> C64 {
    let mut z = C64::new(0.0, 0.0);
    let mut d1 = C64::new(1.0, 0.0);
    let mut d2 = C64::new(0.0, 0.0);
    for _ in 0..m {
        d2 = 2.0 * (d1 * d1 + z * d2);
        d1 = 2.0 * z * d1;
        z = z * z + map.c;
    }
    d2 / 2.0
}

pub(crate) fn polish_root(map: &QuadraticMap, m: usize, seed: C64) -> Result<C64> {
    let mut w = seed;
    for _ in 0..60 {
        let (v, d) = map.iterate_with_derivative(w, m);
        let step = v / d;
        if !step.re.is_finite() || !step.im.is_finite() {
            return Err(Error::Newton(format!("derivative vanished polishing a zero of f^{m}")));
        }
        w -= step;
        if step.norm() <= 1e-15 * w.norm().max(1e-300) {
            return Ok(w);
        }
    }
    Ok(w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    BetaToGolden,
    PreimageToMinusOne,
}

/// Samples of the rescaled return map `G = λ_out · g_{level+1}(· / λ_in)` taking the
/// rescaled `V(level+1,0)` onto the rescaled `V(level,0)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RescaledReturnMap {
    pub level: usize,
    pub normalization: Normalization,
    #[serde(with = "crate::points::one")]
    pub scale_in: C64,
    #[serde(with = "crate::points::one")]
    pub scale_out: C64,
    #[serde(with = "crate::points::vec")]
    pub inputs: Vec<C64>,
    #[serde(with = "crate::points::vec")]
    pub outputs: Vec<C64>,
    /// Least-squares `k` in `G(z) ≈ z^2 + k`.
    #[serde(with = "crate::points::one")]
    pub k: C64,
    /// RMS residual of the fit.
    pub residual: f64,
}

/// Least-squares fit of samples to `z^2 + k`.
pub fn fit_quadratic_offset(inputs: &[C64], outputs: &[C64]) -> Result<(C64, f64)> {
    if inputs.is_empty() || inputs.len() != outputs.len() {
        return Err(Error::EmptySet);
    }
    let n = inputs.len() as f64;
    let k = inputs
        .iter()
        .zip(outputs)
        .map(|(z, g)| g - z * z)
        .sum::<C64>()
        / n;
    let res = (inputs
        .iter()
        .zip(outputs)
        .map(|(z, g)| (g - z * z - k).norm_sqr())
        .sum::<f64>()
        / n)
        .sqrt();
    Ok((k, res))
}

impl PrincipalNest {
    /// Scale `λ_n` of the requested normalization at level `n`.
    pub fn scale(&self, n: usize, normalization: Normalization) -> Result<C64> {
        match normalization {
            Normalization::BetaToGolden => Ok(golden() / self.beta(n)?),
            Normalization::PreimageToMinusOne => {
                let w = self.negative_critical_preimage(n)?;
                Ok(-1.0 / w)
            }
        }
    }

    /// The zero of `g_n` that is negative in the golden-mean normalization.
    pub fn negative_critical_preimage(&self, n: usize) -> Result<C64> {
        let lambda = golden() / self.beta(n)?;
        let pts = self.critical_preimages(n)?;
        match pts.as_slice() {
            [a, b] => {
                let (ra, rb) = ((lambda * a).re, (lambda * b).re);
                if (ra < 0.0) == (rb < 0.0) {
                    return Err(Error::AmbiguousPreimage { first: *a, second: *b });
                }
                Ok(if ra < 0.0 { *a } else { *b })
            }
            _ => Err(Error::Nesting(format!(
                "g_{n} has {} zeros in V({n},0), expected 2",
                pts.len()
            ))),
        }
    }
}

/// Rescaled `g_{level+1}` sampled on a grid over `V(level+1,0)`.
pub fn rescaled_return_map(nest: &PrincipalNest, level: usize, normalization: Normalization) -> Result<RescaledReturnMap> {
    if level + 1 > nest.depth() {
        return Err(Error::Precondition(format!(
            "nest of depth {} has no level {}",
            nest.depth(),
            level + 1
        )));
    }
    let map = nest.map();
    let scale_out = nest.scale(level, normalization)?;
    let scale_in = nest.scale(level + 1, normalization)?;
    let lv = &nest.levels[level + 1];
    let samples = interior_samples(&lv.central, 24);
    let inputs: Vec<C64> = samples.iter().map(|z| z * scale_in).collect();
    let outputs: Vec<C64> = samples
        .iter()
        .map(|&z| map.iterate(z, lv.return_iterate) * scale_out)
        .collect();
    let (k, residual) = fit_quadratic_offset(&inputs, &outputs)?;
    Ok(RescaledReturnMap {
        level,
        normalization,
        scale_in,
        scale_out,
        inputs,
        outputs,
        k,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_offset_fit() {
        let zs: Vec<C64> = (0..20).map(|i| C64::new(0.1 * i as f64 - 1.0, 0.05 * i as f64)).collect();
        let gs: Vec<C64> = zs.iter().map(|z| z * z - 1.0).collect();
        let (k, r) = fit_quadratic_offset(&zs, &gs).unwrap();
        assert!((k + 1.0).norm() < 1e-12 && r < 1e-12);
        let gs: Vec<C64> = zs.iter().map(|z| z * z + 0.5).collect();
        let (k, _) = fit_quadratic_offset(&zs, &gs).unwrap();
        assert!((k - 0.5).norm() < 1e-12);
    }

    #[test]
    fn curvature_of_second_iterate() {
        // f^2(z) = (z^2 + c)^2 + c = z^4 + 2c z^2 + ...
        let m = QuadraticMap::real(-1.3).unwrap();
        let a = second_order_coefficient(&m, 2);
        assert!((a - C64::new(-2.6, 0.0)).norm() < 1e-14);
    }
}
