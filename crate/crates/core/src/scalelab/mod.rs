//! Scaling measurements assembled from nests, parapieces and conformal invariants.
//!
//! Every modulus is reported with the level pair it was taken on, the grid resolution
//! actually used and a tolerance (the fine/coarse disagreement of the Richardson pair).
//! Claims are checked against Richardson values only.

mod dynamical;
mod parameter;
mod probes;
mod report;

use std::collections::BTreeMap;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use dynamical::{
    dynamical_scaling, equip_level_check, k_decay, synthetic_halving, tilde_relation_check, DynamicalScaling,
    EquipLevelCheck, KDecay, KEntry, RecurrenceResidual, SyntheticHalving, TildeRelation,
};
pub use parameter::{
    centering_check, parameter_scaling, CenteringReport, CenteringSpec, ParaEntry, ParameterScaling, WindingEntry,
};
pub use probes::{
    geometry_convergence, hairiness_probe, misiurewicz_markers, GeometryConvergence, GeometryEntry, GeometryMode,
    HairinessLevel, HairinessReport,
};
pub use report::{ReportHeader, ScalingReport, Section};

use crate::conformal::{self, AnnulusSpec, Estimate, ReferenceJulia};
use crate::error::{Error, Result};
use crate::parapuzzle::{build_parapiece, find_fibonacci_parameter, ParaKind, ParaPiece, RescalingSign};
use crate::puzzle::{build_principal_nest, PrincipalNest};
use crate::quaddyn::{Profile, QuadraticMap};

/// Measurement knobs shared by every operation of the lab.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    /// First grid resolution tried for each modulus.
    pub resolution: usize,
    /// Resolution cap of the doubling.
    pub max_resolution: usize,
    pub solver_tol: f64,
    /// Fine/coarse agreement at which doubling stops.
    pub target_change: f64,
    pub julia_samples: usize,
    /// Preimage depth `l` of the Misiurewicz markers (`2^l` markers per piece).
    pub marker_depth: u32,
    pub rescaling_sign: RescalingSign,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            resolution: 512,
            max_resolution: 1024,
            solver_tol: conformal::DEFAULT_SOLVER_TOL,
            target_change: 2e-3,
            julia_samples: 20_000,
            marker_depth: 3,
            rescaling_sign: RescalingSign::MapsToMinusOne,
        }
    }
}

/// One modulus measurement between two named boundaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub n: usize,
    pub outer: String,
    pub inner: String,
    /// Richardson-extrapolated value.
    pub value: f64,
    /// Value at the finest resolution.
    pub raw: f64,
    pub resolution: usize,
    /// Fine/coarse disagreement.
    pub tolerance: f64,
    pub residual: f64,
}

impl Measurement {
    fn from_estimate(n: usize, outer: String, inner: String, e: &Estimate) -> Self {
        Self {
            n,
            outer,
            inner,
            value: e.richardson,
            raw: e.value,
            resolution: e.resolution,
            tolerance: e.change(),
            residual: e.residual,
        }
    }
}

/// Least-squares line through `(n, value)` over a window of levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub quantity: String,
    pub levels: Vec<usize>,
    pub slope: f64,
    pub intercept: f64,
    /// Half-width: two standard errors of the fit plus the propagated measurement
    /// tolerances.
    pub band: f64,
    pub target: Option<f64>,
}

impl SlopeFit {
    /// `|slope - target| / target`.
    pub fn relative_error(&self) -> Option<f64> {
        self.target.map(|t| (self.slope - t).abs() / t.abs())
    }
}

/// Line fit of `(n, value, tolerance)` points.
pub fn fit_slope(quantity: &str, points: &[(usize, f64, f64)], target: Option<f64>) -> Result<SlopeFit> {
    if points.len() < 2 {
        return Err(Error::Precondition(format!(
            "a slope of {quantity} needs two levels, got {}",
            points.len()
        )));
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0 as f64).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 as f64 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 as f64 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let se = if points.len() > 2 {
        let ss: f64 = points
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0 as f64).powi(2))
            .sum();
        (ss / (k - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let propagated = points
        .iter()
        .map(|p| ((p.0 as f64 - mx) / sxx * p.2).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(SlopeFit {
        quantity: quantity.into(),
        levels: points.iter().map(|p| p.0).collect(),
        slope,
        intercept,
        band: 2.0 * se + propagated,
        target,
    })
}

/// The last `⌈depth/2⌉` levels of `available` (sorted ascending).
pub fn slope_window(available: &[usize], depth: usize) -> Vec<usize> {
    let k = depth.div_ceil(2);
    available[available.len().saturating_sub(k)..].to_vec()
}

/// `(1/3) ln 2`, the limit slope of the dynamical moduli.
pub fn dynamical_target() -> f64 {
    2f64.ln() / 3.0
}

/// `(2/3) ln 2`, the limit slope of the parameter moduli.
pub fn parameter_target() -> f64 {
    2.0 * 2f64.ln() / 3.0
}

/// A nest plus lazily built parapieces, moduli and reference data.
pub struct Lab {
    pub nest: PrincipalNest,
    pub profile: Profile,
    pub settings: Settings,
    para_p: Vec<OnceLock<ParaPiece>>,
    para_q: Vec<OnceLock<ParaPiece>>,
    moduli: Mutex<BTreeMap<usize, Measurement>>,
    julia: OnceLock<ReferenceJulia>,
}

impl Lab {
    /// Build the nest of `z^2 + c` to `depth`.
    pub fn new(c: C64, depth: usize, equip_level: f64, profile: Profile, settings: Settings) -> Result<Self> {
        let map = QuadraticMap::new(c)?;
        let nest = build_principal_nest(&map, depth, equip_level, &profile)?;
        if nest.depth() < depth {
            return Err(Error::UnderResolved(format!(
                "nest stopped at depth {} of {depth}: {}",
                nest.depth(),
                nest.diagnostics.join("; ")
            )));
        }
        Ok(Self::from_nest(nest, profile, settings))
    }

    /// The lab at the real Fibonacci parameter.
    pub fn fibonacci(depth: usize, profile: Profile, settings: Settings) -> Result<Self> {
        let c = find_fibonacci_parameter(1e-13)?.c;
        Self::new(C64::new(c, 0.0), depth, crate::puzzle::DEFAULT_EQUIP_LEVEL, profile, settings)
    }

    pub fn from_nest(nest: PrincipalNest, profile: Profile, settings: Settings) -> Self {
        let d = nest.depth() + 1;
        Self {
            nest,
            profile,
            settings,
            para_p: (0..d).map(|_| OnceLock::new()).collect(),
            para_q: (0..d).map(|_| OnceLock::new()).collect(),
            moduli: Mutex::new(BTreeMap::new()),
            julia: OnceLock::new(),
        }
    }

    pub fn depth(&self) -> usize {
        self.nest.depth()
    }

    pub fn c(&self) -> C64 {
        self.nest.c
    }

    /// `P(n)` or `Q(n)`, built once.
    pub fn parapiece(&self, n: usize, kind: ParaKind) -> Result<&ParaPiece> {
        let cells = match kind {
            ParaKind::P => &self.para_p,
            ParaKind::Q => &self.para_q,
        };
        let cell = cells
            .get(n)
            .ok_or_else(|| Error::Precondition(format!("nest of depth {} has no level {n}", self.depth())))?;
        if let Some(p) = cell.get() {
            return Ok(p);
        }
        let p = build_parapiece(n, kind, &self.nest, &self.profile)?;
        Ok(cell.get_or_init(|| p))
    }

    pub fn reference_julia(&self) -> Result<&ReferenceJulia> {
        if let Some(j) = self.julia.get() {
            return Ok(j);
        }
        let j = conformal::reference_julia(self.settings.julia_samples)?;
        Ok(self.julia.get_or_init(|| j))
    }

    /// Adaptive modulus of the annulus between two closed polylines.
    pub fn measure(&self, n: usize, outer: (&str, &[C64]), inner: (&str, &[C64])) -> Result<Measurement> {
        let a = AnnulusSpec::new(outer.1.to_vec(), inner.1.to_vec())?;
        let s = &self.settings;
        let e = conformal::modulus_adaptive(&a, s.resolution, s.max_resolution, s.target_change, s.solver_tol)?;
        Ok(Measurement::from_estimate(n, outer.0.into(), inner.0.into(), &e))
    }

    /// `m_n = mod(V(n-1,0) \ V(n,0))`, cached.
    pub fn central_modulus(&self, n: usize) -> Result<Measurement> {
        if let Some(m) = self.moduli.lock().expect("modulus cache").get(&n) {
            return Ok(m.clone());
        }
        if n < 2 || n > self.depth() {
            return Err(Error::Precondition(format!(
                "m_{n} needs 2 <= n <= {} (V(0,0) and V(1,0) share the alpha fixed point)",
                self.depth()
            )));
        }
        let outer = &self.nest.levels[n - 1].central;
        let inner = &self.nest.levels[n].central;
        let m = self.measure(
            n,
            (&outer.label.to_string(), outer.boundary()),
            (&inner.label.to_string(), inner.boundary()),
        )?;
        self.moduli.lock().expect("modulus cache").insert(n, m.clone());
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_line() {
        let pts: Vec<_> = (2..6).map(|n| (n, 0.5 * n as f64 + 1.0, 0.0)).collect();
        let f = fit_slope("m", &pts, Some(0.5)).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-13);
        assert!(f.band < 1e-12);
        assert!(f.relative_error().unwrap() < 1e-13);
        assert!(fit_slope("m", &pts[..1], None).is_err());
    }

    #[test]
    fn tolerances_widen_the_band() {
        let pts = [(3, 1.0, 0.01), (4, 1.2, 0.01)];
        let f = fit_slope("m", &pts, None).unwrap();
        assert!((f.slope - 0.2).abs() < 1e-14);
        // two points: only the propagated tolerance, sqrt(2) * 0.01
        assert!((f.band - 0.01 * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn window_keeps_the_last_half() {
        assert_eq!(slope_window(&[2, 3, 4, 5, 6], 6), vec![4, 5, 6]);
        assert_eq!(slope_window(&[2, 3, 4, 5], 5), vec![3, 4, 5]);
        assert_eq!(slope_window(&[5], 6), vec![5]);
    }

    #[test]
    fn lab_outside_the_half_wake_is_rejected() {
        let r = Lab::new(C64::new(0.0, 0.0), 3, 1.0, Profile::default(), Settings::default());
        assert!(r.is_err());
    }

    #[test]
    fn shallow_fibonacci_lab() {
        let lab = Lab::fibonacci(3, Profile::default(), Settings::default()).unwrap();
        assert!(lab.central_modulus(1).is_err());
        let m2 = lab.central_modulus(2).unwrap();
        let m3 = lab.central_modulus(3).unwrap();
        assert!(m2.value > 0.5 && m2.value < 1.5 && m2.tolerance < 1e-2, "{m2:?}");
        assert!(m3.value > 0.5 && m3.value < 1.5, "{m3:?}");
        assert_eq!(lab.winding(2).unwrap().winding, 1);
        assert_eq!(lab.winding(3).unwrap().winding, 1);
        let h = lab.hairiness(C64::new(0.0, 0.0), 0.05, 2..=3).unwrap();
        assert!(h.hit_every_level(), "{h:?}");
        let h = lab.hairiness(C64::new(-1.0, 0.0), 0.05, 2..=3).unwrap();
        assert!(h.hit_every_level(), "{h:?}");
    }
}
