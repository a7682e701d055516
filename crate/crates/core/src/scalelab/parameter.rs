//! Parameter-plane moduli of the parapieces, measured directly and through the
//! parameter map, the winding of `M_n(∂P(n))`, and the centering of `M_n(∂P(n+1))`.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_slope, parameter_target, slope_window, Lab, Measurement, Settings, SlopeFit};
use crate::conformal::ReferenceJulia;
use crate::error::{Error, Result};
use crate::geometry::winding_number;
use crate::parapuzzle::{find_superstable, ParaKind, ParameterMap, RescalingSign};
use crate::quaddyn::Profile;

/// Image of the Fibonacci parameter under `M_n` in the limit.
pub(crate) fn anchor(sign: RescalingSign) -> C64 {
    match sign {
        RescalingSign::MapsToMinusOne => C64::new(-1.0, 0.0),
        RescalingSign::Reciprocal => C64::new(1.0, 0.0),
    }
}

/// `mod(P(n-1) \ P(n))` by both routes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParaEntry {
    pub n: usize,
    pub direct: Measurement,
    /// The same annulus mapped by `M_{n-1}` (univalent on `Q(n-1) ⊃ P(n-1)`); from
    /// `n = 3` on.
    pub image: Option<Measurement>,
}

impl ParaEntry {
    /// The two routes agree within their combined tolerance.
    pub fn routes_agree(&self) -> Option<bool> {
        self.image
            .as_ref()
            .map(|i| (i.value - self.direct.value).abs() <= i.tolerance + self.direct.tolerance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindingEntry {
    pub n: usize,
    #[serde(with = "crate::points::one")]
    pub about: C64,
    pub winding: i64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterScaling {
    pub depth: usize,
    pub para_seq: Vec<ParaEntry>,
    pub winding_seq: Vec<WindingEntry>,
    pub para_slope: SlopeFit,
    /// Dynamical slope on the same window of levels.
    pub dynamical_slope: SlopeFit,
    /// `para_slope / dynamical_slope`.
    pub ratio: f64,
    pub ratio_band: f64,
}

impl Lab {
    fn parameter_map(&self, n: usize, with_domain: bool) -> Result<ParameterMap> {
        let m = ParameterMap::new(&self.nest, n, self.settings.rescaling_sign)?;
        Ok(if with_domain {
            m.with_domain(self.parapiece(n, ParaKind::Q)?.clone())
        } else {
            m
        })
    }

    fn para_entry(&self, n: usize) -> Result<ParaEntry> {
        let outer = self.parapiece(n - 1, ParaKind::P)?;
        let inner = self.parapiece(n, ParaKind::P)?;
        let (lo, li) = (outer.piece.label.to_string(), inner.piece.label.to_string());
        let direct = self.measure(n, (&lo, outer.boundary()), (&li, inner.boundary()))?;
        let image = if n >= 3 {
            let m = self.parameter_map(n - 1, true)?;
            let a = m.eval_path(outer.boundary())?.images();
            let b = m.eval_path(inner.boundary())?.images();
            let tag = |s: &str| format!("M_{}({s})", n - 1);
            Some(self.measure(n, (&tag(&lo), &a), (&tag(&li), &b))?)
        } else {
            None
        };
        Ok(ParaEntry { n, direct, image })
    }

    /// Winding of `M_n(∂P(n))` about the image of the Fibonacci parameter.
    pub fn winding(&self, n: usize) -> Result<WindingEntry> {
        let p = self.parapiece(n, ParaKind::P)?;
        let images = self.parameter_map(n, true)?.eval_path(p.boundary())?.images();
        let about = anchor(self.settings.rescaling_sign);
        Ok(WindingEntry {
            n,
            about,
            winding: winding_number(&images, about, 0.0)?,
            samples: images.len(),
        })
    }

    /// Windings for `n = 2..=depth`.
    pub fn winding_seq(&self) -> Result<Vec<WindingEntry>> {
        (2..=self.depth()).into_par_iter().map(|n| self.winding(n)).collect()
    }

    /// Parameter moduli for `n = 2..=depth`, windings, and the slope ratio against the
    /// dynamical moduli. Meaningful for a nest at the Fibonacci parameter.
    pub fn parameter_scaling(&self) -> Result<ParameterScaling> {
        let depth = self.depth();
        let para_seq: Vec<ParaEntry> = (2..=depth).into_par_iter().map(|n| self.para_entry(n)).collect::<Result<_>>()?;
        let winding_seq = self.winding_seq()?;
        let levels: Vec<usize> = para_seq.iter().map(|e| e.n).collect();
        let window = slope_window(&levels, depth);
        let pp: Vec<_> = para_seq
            .iter()
            .filter(|e| window.contains(&e.n))
            .map(|e| (e.n, e.direct.value, e.direct.tolerance))
            .collect();
        let para_slope = fit_slope("para", &pp, Some(parameter_target()))?;
        let dp = window
            .par_iter()
            .map(|&n| self.central_modulus(n).map(|m| (n, m.value, m.tolerance)))
            .collect::<Result<Vec<_>>>()?;
        let dynamical_slope = fit_slope("m", &dp, Some(super::dynamical_target()))?;
        let ratio = para_slope.slope / dynamical_slope.slope;
        let ratio_band = ratio.abs()
            * (para_slope.band / para_slope.slope.abs() + dynamical_slope.band / dynamical_slope.slope.abs());
        Ok(ParameterScaling {
            depth,
            para_seq,
            winding_seq,
            para_slope,
            dynamical_slope,
            ratio,
            ratio_band,
        })
    }

    /// Centering of `M_n(∂P(n+1))` about the anchor, for `2 <= n < depth`.
    pub fn centering(&self, n: usize) -> Result<CenteringReport> {
        if n < 2 || n >= self.depth() {
            return Err(Error::Precondition(format!(
                "centering at level {n} needs 2 <= n < depth = {}",
                self.depth()
            )));
        }
        let spec = CenteringSpec::from_reference(self.reference_julia()?)?;
        // M_{n+1} is singular at c_n (its zero of f^{u(n+1)} meets the critical point);
        // c_{n+1} lies in P(n+1) where both maps are regular
        let center = find_superstable(n + 1)?;
        let pn = self.parapiece(n, ParaKind::P)?;
        let step = DERIVATIVE_STEP * pn.piece.diameter();
        let cn = C64::new(center.c, 0.0);
        let derivative = |m: &ParameterMap| -> Result<C64> {
            Ok((m.eval(cn + step)? - m.eval(cn - step)?) / (2.0 * step))
        };
        let dn = derivative(&self.parameter_map(n, false)?)?;
        let dn1 = derivative(&self.parameter_map(n + 1, false)?)?;
        let ratio = dn / dn1;
        let inner = self.parapiece(n + 1, ParaKind::P)?;
        let images = self.parameter_map(n, true)?.eval_path(inner.boundary())?.images();
        let a = anchor(self.settings.rescaling_sign);
        let dist: Vec<f64> = images.iter().map(|z| (z - a).norm()).collect();
        let far = dist.iter().copied().fold(0.0, f64::max);
        let near = dist.iter().copied().fold(f64::INFINITY, f64::min);
        let r = ratio.norm();
        Ok(CenteringReport {
            n,
            spec,
            ratio,
            derivative_step: step,
            samples: images.len(),
            outer_margin: (r * spec.outer - far) / (r * spec.outer),
            inner_margin: (near - r * spec.inner) / (r * spec.inner),
            measured_ratio: far / near,
            reference_ratio: spec.outer / spec.inner,
        })
    }
}

/// Step of the centered difference for `M'_n`, relative to `diam P(n)`.
const DERIVATIVE_STEP: f64 = 1e-3;

/// Radii of the annulus about 0 containing the reference Julia set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenteringSpec {
    #[serde(rename = "T")]
    pub outer: f64,
    #[serde(rename = "t")]
    pub inner: f64,
}

impl CenteringSpec {
    pub fn from_reference(j: &ReferenceJulia) -> Result<Self> {
        if !(j.inner_radius < j.outer_radius) {
            return Err(Error::Precondition("reference radii are not ordered".into()));
        }
        Ok(Self {
            outer: j.outer_radius,
            inner: j.inner_radius,
        })
    }

    /// Every sample lies in the closed annulus `t <= |z| <= T`.
    pub fn contains_all(&self, points: &[C64]) -> bool {
        points.iter().all(|z| z.norm() <= self.outer && z.norm() >= self.inner)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenteringReport {
    pub n: usize,
    pub spec: CenteringSpec,
    /// `M'_n / M'_{n+1}` at `c_{n+1}`.
    #[serde(with = "crate::points::one")]
    pub ratio: C64,
    pub derivative_step: f64,
    pub samples: usize,
    /// `(|ratio| T - max |M_n - anchor|) / (|ratio| T)`; positive when contained.
    pub outer_margin: f64,
    /// `(min |M_n - anchor| - |ratio| t) / (|ratio| t)`; positive when the small disc
    /// is avoided.
    pub inner_margin: f64,
    /// `max / min` of `|M_n - anchor|` on the samples.
    pub measured_ratio: f64,
    /// `T / t`.
    pub reference_ratio: f64,
}

impl CenteringReport {
    pub fn contained(&self) -> bool {
        self.outer_margin > 0.0 && self.inner_margin > 0.0
    }

    /// `|measured / reference - 1|`.
    pub fn ratio_error(&self) -> f64 {
        (self.measured_ratio / self.reference_ratio - 1.0).abs()
    }
}

/// Parameter scaling at the Fibonacci parameter to `depth`.
pub fn parameter_scaling(depth: usize, profile: &Profile, settings: &Settings) -> Result<ParameterScaling> {
    Lab::fibonacci(depth, profile.clone(), settings.clone())?.parameter_scaling()
}

/// Centering at level `n` around the Fibonacci parameter.
pub fn centering_check(n: usize, profile: &Profile, settings: &Settings) -> Result<CenteringReport> {
    Lab::fibonacci(n + 1, profile.clone(), settings.clone())?.centering(n)
}
