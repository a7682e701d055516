//! Dynamical-plane moduli of the principal nest, the recurrence they satisfy, the
//! two-to-one relation with the off-critical pieces, and the decay of `k(n)`.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{dynamical_target, fit_slope, slope_window, Lab, Measurement, Settings, SlopeFit};
use crate::conformal::{self, AnnulusSpec};
use crate::error::{Error, Result};
use crate::puzzle::{rescaled_return_map, Normalization};
use crate::quaddyn::Profile;

/// `ρ_n = m_{n+1} - (m_n + m_{n-1} + ln 2) / 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceResidual {
    pub n: usize,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicalScaling {
    #[serde(with = "crate::points::one")]
    pub c: C64,
    pub depth: usize,
    pub equip_level: f64,
    /// `m_n = mod(V(n-1,0) \ V(n,0))` for `n = 2..=depth`.
    pub m_seq: Vec<Measurement>,
    pub rho_seq: Vec<RecurrenceResidual>,
    pub slope: SlopeFit,
    /// Levels left out and why.
    pub excluded: Vec<String>,
}

impl DynamicalScaling {
    /// `m_n < m_{n+1}` for every measured `n >= from`.
    pub fn increasing_from(&self, from: usize) -> bool {
        let tail: Vec<f64> = self.m_seq.iter().filter(|m| m.n >= from).map(|m| m.value).collect();
        tail.len() >= 2 && tail.windows(2).all(|w| w[0] < w[1])
    }

    /// `|ρ|` decreases over the last two residuals.
    pub fn residual_decreasing(&self) -> bool {
        match self.rho_seq.as_slice() {
            [.., a, b] => b.value.abs() < a.value.abs(),
            _ => false,
        }
    }

    pub fn modulus(&self, n: usize) -> Option<&Measurement> {
        self.m_seq.iter().find(|m| m.n == n)
    }
}

impl Lab {
    /// Moduli `m_n` for `n = 2..=depth`, levels measured in parallel.
    pub fn central_moduli(&self) -> Result<Vec<Measurement>> {
        (2..=self.depth())
            .into_par_iter()
            .map(|n| self.central_modulus(n))
            .collect()
    }

    pub fn dynamical_scaling(&self) -> Result<DynamicalScaling> {
        let m_seq = self.central_moduli()?;
        let half_ln2 = 0.5 * 2f64.ln();
        let rho_seq = m_seq
            .windows(3)
            .map(|w| RecurrenceResidual {
                n: w[1].n,
                value: w[2].value - (0.5 * w[1].value + 0.5 * w[0].value + half_ln2),
                tolerance: w[2].tolerance + 0.5 * (w[1].tolerance + w[0].tolerance),
            })
            .collect();
        let levels: Vec<usize> = m_seq.iter().map(|m| m.n).collect();
        let window = slope_window(&levels, self.depth());
        let pts: Vec<_> = m_seq
            .iter()
            .filter(|m| window.contains(&m.n))
            .map(|m| (m.n, m.value, m.tolerance))
            .collect();
        let slope = fit_slope("m", &pts, Some(dynamical_target()))?;
        Ok(DynamicalScaling {
            c: self.c(),
            depth: self.depth(),
            equip_level: self.nest.equip_level,
            m_seq,
            rho_seq,
            slope,
            excluded: vec!["m_1: V(0,0) and V(1,0) share the alpha fixed point".into()],
        })
    }

    /// `|mod(V(n,0), V(n+1,0)) - mod(V(n-1,0), ~V(n,1)) / 2|` for `1 <= n < depth`.
    pub fn tilde_relation(&self, n: usize) -> Result<TildeRelation> {
        if n == 0 || n >= self.depth() {
            return Err(Error::Precondition(format!(
                "the tilde relation at level {n} needs 1 <= n < depth = {}",
                self.depth()
            )));
        }
        let lhs = self.central_modulus(n + 1)?;
        let outer = &self.nest.levels[n - 1].central;
        let tilde = self.nest.levels[n]
            .tilde
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("nest has no ~V({n},1)")))?;
        let rhs = self.measure(
            n,
            (&outer.label.to_string(), outer.boundary()),
            (&tilde.label.to_string(), tilde.boundary()),
        )?;
        let defect = (lhs.value - 0.5 * rhs.value).abs();
        let tolerance = lhs.tolerance + 0.5 * rhs.tolerance;
        Ok(TildeRelation {
            n,
            lhs,
            rhs,
            defect,
            tolerance,
            asymptotic: n >= 2,
        })
    }

    /// `k(n)` from the golden-normalized return maps, `n = 1..=depth`.
    pub fn k_decay(&self) -> Result<KDecay> {
        let entries = (1..=self.depth())
            .map(|n| {
                let r = rescaled_return_map(&self.nest, n - 1, Normalization::BetaToGolden)?;
                Ok(KEntry {
                    n,
                    k: r.k,
                    residual: r.residual,
                    distance: (r.k + 1.0).norm(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let pts: Vec<_> = entries
            .iter()
            .filter(|e| e.n >= 2)
            .map(|e| (e.n, e.distance.ln(), 0.0))
            .collect();
        let rate = fit_slope("ln|k+1|", &pts, None).ok();
        Ok(KDecay { entries, rate })
    }
}

/// Both sides of the two-to-one relation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TildeRelation {
    pub n: usize,
    /// `mod(V(n,0) \ V(n+1,0))`.
    pub lhs: Measurement,
    /// `mod(V(n-1,0) \ ~V(n,1))`.
    pub rhs: Measurement,
    pub defect: f64,
    pub tolerance: f64,
    /// Level 1 is pre-asymptotic and carries no claim.
    pub asymptotic: bool,
}

impl TildeRelation {
    /// Defect within twice the combined tolerance.
    pub fn holds(&self) -> bool {
        self.defect <= 2.0 * self.tolerance
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KEntry {
    pub n: usize,
    #[serde(with = "crate::points::one")]
    pub k: C64,
    pub residual: f64,
    /// `|k + 1|`.
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KDecay {
    pub entries: Vec<KEntry>,
    /// Slope of `ln|k + 1|` against `n` from level 2 on.
    pub rate: Option<SlopeFit>,
}

impl KDecay {
    /// `|k + 1|` strictly decreasing over levels `from..=to`.
    pub fn decreasing_over(&self, from: usize, to: usize) -> bool {
        let d: Vec<f64> = self
            .entries
            .iter()
            .filter(|e| (from..=to).contains(&e.n))
            .map(|e| e.distance)
            .collect();
        d.len() == to + 1 - from && d.windows(2).all(|w| w[1] < w[0])
    }
}

/// `m_n` at two equipotential levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquipLevelCheck {
    pub levels: (f64, f64),
    /// `(n, m_n at the first level, m_n at the second, tolerance)`.
    pub entries: Vec<(usize, f64, f64, f64)>,
}

impl EquipLevelCheck {
    /// Every level beyond 2 agrees within the combined tolerance.
    pub fn passed(&self) -> bool {
        self.entries
            .iter()
            .filter(|e| e.0 > 2)
            .all(|&(_, a, b, tol)| (a - b).abs() <= tol)
    }
}

/// Mod of a round annulus against its preimage under `z^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticHalving {
    pub image: f64,
    pub preimage: f64,
    /// `|preimage / image - 1/2| * 2`.
    pub relative_error: f64,
}

/// Preimage of a closed curve winding once about 0 under `z^2`, traversed once.
pub(crate) fn square_preimage(curve: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(2 * curve.len());
    let mut prev = curve[0].sqrt();
    for k in 0..2 * curve.len() {
        let r = curve[k % curve.len()].sqrt();
        let w = if (r - prev).norm() <= (r + prev).norm() { r } else { -r };
        out.push(w);
        prev = w;
    }
    out
}

/// The halving law on `1 < |z| < 4` and on its exact preimage `1 < |z| < 2`, both
/// measured on the grid.
pub fn synthetic_halving(settings: &Settings) -> Result<SyntheticHalving> {
    let z0 = C64::new(0.0, 0.0);
    let image = AnnulusSpec::round(z0, 1.0, 4.0, 2048)?;
    let pre = AnnulusSpec::new(square_preimage(&image.outer), square_preimage(&image.inner))?;
    let m = |a: &AnnulusSpec| {
        conformal::modulus_adaptive(a, settings.resolution, settings.max_resolution, settings.target_change, settings.solver_tol)
            .map(|e| e.richardson)
    };
    let (image, preimage) = (m(&image)?, m(&pre)?);
    Ok(SyntheticHalving {
        image,
        preimage,
        relative_error: (preimage / image - 0.5).abs() * 2.0,
    })
}

/// Dynamical scaling of the nest of `z^2 + c` to `depth`.
pub fn dynamical_scaling(c: C64, depth: usize, profile: &Profile, settings: &Settings) -> Result<DynamicalScaling> {
    Lab::new(c, depth, crate::puzzle::DEFAULT_EQUIP_LEVEL, profile.clone(), settings.clone())?.dynamical_scaling()
}

/// The two-to-one relation at level `n`.
pub fn tilde_relation_check(c: C64, n: usize, profile: &Profile, settings: &Settings) -> Result<TildeRelation> {
    Lab::new(c, n + 1, crate::puzzle::DEFAULT_EQUIP_LEVEL, profile.clone(), settings.clone())?.tilde_relation(n)
}

/// `k(n, c)` for `n = 1..=depth`.
pub fn k_decay(c: C64, depth: usize, profile: &Profile) -> Result<KDecay> {
    Lab::new(c, depth, crate::puzzle::DEFAULT_EQUIP_LEVEL, profile.clone(), Settings::default())?.k_decay()
}

/// `m_n` of nests built at equipotential levels `a` and `b`.
pub fn equip_level_check(c: C64, depth: usize, levels: (f64, f64), profile: &Profile, settings: &Settings) -> Result<EquipLevelCheck> {
    let run = |e: f64| -> Result<Vec<Measurement>> {
        Lab::new(c, depth, e, profile.clone(), settings.clone())?.central_moduli()
    };
    let (ma, mb) = (run(levels.0)?, run(levels.1)?);
    let entries = ma
        .iter()
        .zip(&mb)
        .map(|(a, b)| (a.n, a.value, b.value, a.tolerance + b.tolerance))
        .collect();
    Ok(EquipLevelCheck { levels, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::circle;
    use crate::puzzle::fit_quadratic_offset;

    #[test]
    fn square_preimage_of_a_circle() {
        let c = circle(C64::new(0.0, 0.0), 4.0, 64);
        let p = square_preimage(&c);
        assert_eq!(p.len(), 128);
        assert!(p.iter().all(|z| (z.norm() - 2.0).abs() < 1e-14));
        assert_eq!(crate::geometry::winding_number(&p, C64::new(0.0, 0.0), 0.0).unwrap(), 1);
    }

    #[test]
    fn halving_under_squaring() {
        let s = Settings {
            resolution: 128,
            max_resolution: 256,
            ..Settings::default()
        };
        let h = synthetic_halving(&s).unwrap();
        assert!((h.image - 4f64.ln()).abs() < 0.01);
        assert!(h.relative_error < 0.01, "{h:?}");
    }

    #[test]
    fn halving_of_an_off_center_annulus() {
        // not round: the law still holds because z^2 is a degree-two covering
        let outer = circle(C64::new(0.4, 0.1), 3.0, 1024);
        let inner = circle(C64::new(0.1, -0.2), 0.6, 1024);
        let a = AnnulusSpec::new(outer.clone(), inner.clone()).unwrap();
        let p = AnnulusSpec::new(square_preimage(&outer), square_preimage(&inner)).unwrap();
        let m = |a: &AnnulusSpec| conformal::modulus(a, 256, 1e-9).unwrap().richardson;
        let (ma, mp) = (m(&a), m(&p));
        assert!((mp / ma - 0.5).abs() < 0.005, "{ma} {mp}");
    }

    #[test]
    fn k_fit_of_exact_maps() {
        let zs: Vec<C64> = (0..30).map(|i| C64::from_polar(0.3 + 0.02 * i as f64, 0.7 * i as f64)).collect();
        let (k, r) = fit_quadratic_offset(&zs, &zs.iter().map(|z| z * z - 1.0).collect::<Vec<_>>()).unwrap();
        assert!((k + 1.0).norm() < 1e-12 && r < 1e-12);
        let (k, _) = fit_quadratic_offset(&zs, &zs.iter().map(|z| z * z + 0.5).collect::<Vec<_>>()).unwrap();
        assert!((k - 0.5).norm() < 1e-12);
    }

    #[test]
    fn recurrence_bookkeeping() {
        let m = |n, v| Measurement {
            n,
            outer: String::new(),
            inner: String::new(),
            value: v,
            raw: v,
            resolution: 0,
            tolerance: 0.01,
            residual: 0.0,
        };
        let s = DynamicalScaling {
            c: C64::new(0.0, 0.0),
            depth: 5,
            equip_level: 1.0,
            m_seq: vec![m(2, 0.9), m(3, 0.8), m(4, 1.1), m(5, 1.2)],
            rho_seq: vec![],
            slope: fit_slope("m", &[(4, 1.1, 0.0), (5, 1.2, 0.0)], None).unwrap(),
            excluded: vec![],
        };
        assert!(!s.increasing_from(2));
        assert!(s.increasing_from(3));
        assert!(!s.residual_decreasing());
    }
}
