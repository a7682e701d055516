//! Hausdorff convergence of rescaled pieces to the reference Julia set, and the
//! hairiness probe on affinely rescaled parameter samples.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Lab, Settings};
use crate::conformal::hausdorff;
use crate::error::{Error, Result};
use crate::geometry;
use crate::parapuzzle::{find_superstable, trace_parameter_ray, ParaKind, ParaPiece, MAX_CENTER_LEVEL};
use crate::puzzle::{arc_span, Normalization, DEFAULT_EQUIP_LEVEL};
use crate::quaddyn::{ExternalAngle, Profile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryMode {
    /// `λ_n ∂V(n,0)` in both normalizations.
    Dynamical,
    /// `M_n(∂P(n))`.
    Parameter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryEntry {
    pub n: usize,
    /// Normalization or map the curve was rescaled by.
    pub rescaling: String,
    pub distance: f64,
    /// Half the largest boundary gap plus the reference sampling cell diagonal.
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryConvergence {
    pub mode: GeometryMode,
    pub entries: Vec<GeometryEntry>,
}

impl GeometryConvergence {
    /// `(n, distance)` for one rescaling.
    pub fn sequence(&self, rescaling: &str) -> Vec<(usize, f64)> {
        self.entries
            .iter()
            .filter(|e| e.rescaling == rescaling)
            .map(|e| (e.n, e.distance))
            .collect()
    }

    pub fn rescalings(&self) -> Vec<String> {
        let mut r: Vec<String> = self.entries.iter().map(|e| e.rescaling.clone()).collect();
        r.sort();
        r.dedup();
        r
    }

    /// Distances of every rescaling non-increasing over levels `from..=to`.
    pub fn non_increasing_over(&self, from: usize, to: usize) -> bool {
        self.rescalings().iter().all(|r| {
            let d: Vec<f64> = self
                .sequence(r)
                .into_iter()
                .filter(|(n, _)| (from..=to).contains(n))
                .map(|p| p.1)
                .collect();
            d.len() == to + 1 - from && d.windows(2).all(|w| w[1] <= w[0])
        })
    }
}

/// Boundary thinned for distance queries; moves the curve by at most `1e-5` of its size.
fn thinned(curve: &[C64]) -> Vec<C64> {
    geometry::thin(curve, 1e-5 * geometry::diameter(curve))
}

fn normalization_name(n: Normalization) -> &'static str {
    match n {
        Normalization::BetaToGolden => "beta-to-golden",
        Normalization::PreimageToMinusOne => "preimage-to-minus-one",
    }
}

impl Lab {
    fn geometry_entry(&self, n: usize, rescaling: String, curve: Vec<C64>) -> Result<GeometryEntry> {
        let j = self.reference_julia()?;
        let curve = thinned(&curve);
        Ok(GeometryEntry {
            n,
            rescaling,
            distance: hausdorff(&curve, &j.points)?,
            tolerance: 0.5 * geometry::max_gap(&curve) + j.cell * std::f64::consts::SQRT_2,
        })
    }

    /// Hausdorff distances to the reference Julia set: `λ_n ∂V(n,0)` for `n = 1..=depth`
    /// or `M_n(∂P(n))` for `n = 2..=depth`.
    pub fn geometry_convergence(&self, mode: GeometryMode) -> Result<GeometryConvergence> {
        self.reference_julia()?;
        let entries = match mode {
            GeometryMode::Dynamical => {
                let jobs: Vec<(usize, Normalization)> = (1..=self.depth())
                    .flat_map(|n| [(n, Normalization::BetaToGolden), (n, Normalization::PreimageToMinusOne)])
                    .collect();
                jobs.into_par_iter()
                    .map(|(n, norm)| {
                        let lambda = self.nest.scale(n, norm)?;
                        let curve = self.nest.levels[n].central.boundary().iter().map(|z| lambda * z).collect();
                        self.geometry_entry(n, normalization_name(norm).into(), curve)
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            GeometryMode::Parameter => (2..=self.depth())
                .into_par_iter()
                .map(|n| {
                    let p = self.parapiece(n, ParaKind::P)?;
                    let m = crate::parapuzzle::ParameterMap::new(&self.nest, n, self.settings.rescaling_sign)?
                        .with_domain(self.parapiece(n, ParaKind::Q)?.clone());
                    let curve = m.eval_path(p.boundary())?.images();
                    self.geometry_entry(n, "M_n".into(), curve)
                })
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(GeometryConvergence { mode, entries })
    }
}

/// Geometry convergence for the nest of `z^2 + c` to `depth`.
pub fn geometry_convergence(
    c: C64,
    depth: usize,
    mode: GeometryMode,
    profile: &Profile,
    settings: &Settings,
) -> Result<GeometryConvergence> {
    Lab::new(c, depth, DEFAULT_EQUIP_LEVEL, profile.clone(), settings.clone())?.geometry_convergence(mode)
}

/// `2^l` Misiurewicz parameters on the boundary side of `piece`: landings of parameter
/// rays at angles spread evenly through its equipotential arcs. Landings that fall
/// outside the piece (Newton converging to another root) are dropped.
pub fn misiurewicz_markers(piece: &ParaPiece, l: u32, profile: &Profile) -> Result<Vec<C64>> {
    let comb = &piece.piece.combinatorics;
    let total = 1usize << l;
    let a = comb.arcs.len();
    let level = comb.level;
    let diam = piece.piece.diameter();
    let mut angles = Vec::with_capacity(total);
    for (i, (from, to)) in comb.arcs.iter().enumerate() {
        let k = (total / a + usize::from(i < total % a)) as u128;
        let (num, den) = arc_span(from, to);
        for j in 0..k {
            let d = den
                .checked_mul(2 * k)
                .ok_or_else(|| Error::AngleBudget("marker denominator overflow".into()))?;
            angles.push(from.add_turns(num * (2 * j + 1), d));
        }
    }
    let landings: Vec<Option<C64>> = angles
        .par_iter()
        .map(|&theta: &ExternalAngle| {
            let trace = trace_parameter_ray(theta, level, level * MARKER_FLOOR, profile).ok()?;
            let c = trace.landing_estimate?;
            let inside = piece.contains(c).unwrap_or(true)
                || geometry::distance_to_polyline(piece.boundary(), c) <= 1e-3 * diam;
            inside.then_some(c)
        })
        .collect();
    Ok(landings.into_iter().flatten().collect())
}

/// Depth of the marker rays below the piece level before Newton takes over.
const MARKER_FLOOR: f64 = 1.0 / 1024.0;

/// One level of the hairiness probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HairinessLevel {
    pub n: usize,
    pub markers: usize,
    pub real_slice: usize,
    pub centers: usize,
    /// Smallest `|R_n(s) - center|` over the samples.
    pub min_distance: f64,
    pub hit: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HairinessReport {
    #[serde(with = "crate::points::one")]
    pub center: C64,
    pub radius: f64,
    pub levels: Vec<HairinessLevel>,
}

impl HairinessReport {
    pub fn hit_every_level(&self) -> bool {
        !self.levels.is_empty() && self.levels.iter().all(|l| l.hit)
    }

    pub fn min_distance_non_increasing(&self) -> bool {
        self.levels.windows(2).all(|w| w[1].min_distance <= w[0].min_distance)
    }
}

/// Real parameters of `P(n)` around `c_fib` whose critical orbit stays in `|z| <= 2`.
fn real_slice(piece: &ParaPiece, c_fib: f64, count: usize) -> Vec<C64> {
    let b = piece.boundary();
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for i in 0..b.len() {
        let (p, q) = (b[i], b[(i + 1) % b.len()]);
        if (p.im > 0.0) != (q.im > 0.0) {
            let x = p.re + (q.re - p.re) * (-p.im) / (q.im - p.im);
            if x < c_fib {
                lo = lo.max(x);
            } else {
                hi = hi.min(x);
            }
        }
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return vec![C64::new(c_fib, 0.0)];
    }
    let mut out = vec![C64::new(c_fib, 0.0)];
    for k in 0..count {
        let c = lo + (hi - lo) * (k as f64 + 0.5) / count as f64;
        let mut z = 0.0f64;
        let bounded = (0..REAL_SLICE_ITER).all(|_| {
            z = z * z + c;
            z.abs() <= 2.0
        });
        if bounded {
            out.push(C64::new(c, 0.0));
        }
    }
    out
}

const REAL_SLICE_ITER: usize = 4096;
const REAL_SLICE_SAMPLES: usize = 512;

impl Lab {
    /// The probe on levels `levels` (each in `1..=min(depth, MAX_CENTER_LEVEL)`), with
    /// `R_n(c) = (c - c_n) / (c_n - c_fib)`.
    pub fn hairiness(&self, center: C64, radius: f64, levels: std::ops::RangeInclusive<usize>) -> Result<HairinessReport> {
        if !(radius > 0.0) {
            return Err(Error::Precondition(format!("disc radius {radius} must be positive")));
        }
        let c_fib = self.c().re;
        let top = self.depth().min(MAX_CENTER_LEVEL);
        let levels: Vec<usize> = levels.filter(|&n| n >= 1 && n <= top).collect();
        let centers: Vec<C64> = (levels.first().copied().unwrap_or(1)..=MAX_CENTER_LEVEL)
            .map(|k| find_superstable(k).map(|s| C64::new(s.c, 0.0)))
            .collect::<Result<_>>()?;
        let first = levels.first().copied().unwrap_or(1);
        let out = levels
            .par_iter()
            .map(|&n| {
                let piece = self.parapiece(n, ParaKind::P)?;
                let markers = misiurewicz_markers(piece, self.settings.marker_depth, &self.profile)?;
                let slice = real_slice(piece, c_fib, REAL_SLICE_SAMPLES);
                let cs = &centers[n - first..];
                let cn = cs[0];
                let r = |c: C64| (c - cn) / (cn - c_fib);
                let min_distance = markers
                    .iter()
                    .chain(&slice)
                    .chain(cs)
                    .map(|&c| (r(c) - center).norm())
                    .fold(f64::INFINITY, f64::min);
                Ok(HairinessLevel {
                    n,
                    markers: markers.len(),
                    real_slice: slice.len(),
                    centers: cs.len(),
                    min_distance,
                    hit: min_distance <= radius,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(HairinessReport {
            center,
            radius,
            levels: out,
        })
    }
}

/// The probe around the Fibonacci parameter.
pub fn hairiness_probe(
    center: C64,
    radius: f64,
    levels: std::ops::RangeInclusive<usize>,
    profile: &Profile,
    settings: &Settings,
) -> Result<HairinessReport> {
    let depth = *levels.end();
    Lab::fibonacci(depth, profile.clone(), settings.clone())?.hairiness(center, radius, levels)
}
