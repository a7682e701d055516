//! The rescaling `r_{n,c}` and the parameter map `M_n(c) = r_{n-1,c}(g_{n,c}(0))`.
//!
//! `M_n` is evaluated without building a nest per parameter: the zero `w_{n-1}(c)` of
//! `g_{n-1,c} = f_c^{u(n)}` that fixes the rescaling is continued by Newton along a path
//! from the reference parameter, where it was picked out geometrically.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use super::centers::SuperstableCenter;
use super::pieces::ParaPiece;
use crate::error::{Error, Result};
use crate::puzzle::{fibonacci, PrincipalNest};
use crate::quaddyn::QuadraticMap;

/// Sign convention of the rescaling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RescalingSign {
    /// `r(x) = -x / w`, so the chosen zero `w` of `g_n` goes to `-1`.
    #[default]
    MapsToMinusOne,
    /// `r(x) = x / w`, the literal reciprocal; `w` goes to `+1`.
    Reciprocal,
}

impl RescalingSign {
    fn scale(self, w: C64) -> C64 {
        match self {
            RescalingSign::MapsToMinusOne => -1.0 / w,
            RescalingSign::Reciprocal => 1.0 / w,
        }
    }
}

/// The linear map `x ↦ λx` at level `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rescaling {
    pub level: usize,
    pub sign: RescalingSign,
    #[serde(with = "crate::points::one")]
    pub lambda: C64,
    /// The zero of `g_n` in `V(n,0)` fixing `λ`.
    #[serde(with = "crate::points::one")]
    pub preimage: C64,
}

impl Rescaling {
    pub fn apply(&self, x: C64) -> C64 {
        self.lambda * x
    }
}

/// `r_{n,c}` for the nest's parameter: the zero of `g_n` on the negative side of the
/// golden-mean normalization goes to `-1` (or `+1` with [`RescalingSign::Reciprocal`]).
pub fn rescaling_map(nest: &PrincipalNest, n: usize, sign: RescalingSign) -> Result<Rescaling> {
    if n == 0 || n > nest.depth() {
        return Err(Error::Precondition(format!(
            "rescaling needs a return map at level {n}; nest depth is {}",
            nest.depth()
        )));
    }
    let w = nest.negative_critical_preimage(n)?;
    Ok(Rescaling {
        level: n,
        sign,
        lambda: sign.scale(w),
        preimage: w,
    })
}

/// Samples `(c, M_n(c))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterMapSamples {
    pub n: usize,
    #[serde(with = "crate::points::pairs")]
    pub samples: Vec<(C64, C64)>,
}

impl ParameterMapSamples {
    pub fn images(&self) -> Vec<C64> {
        self.samples.iter().map(|s| s.1).collect()
    }
}

/// `M_n` with `w_{n-1}` continued from a reference parameter.
#[derive(Clone, Debug)]
pub struct ParameterMap {
    pub n: usize,
    pub sign: RescalingSign,
    c_ref: C64,
    w_ref: C64,
    domain: Option<ParaPiece>,
}

/// Boundary tolerance (relative to the domain diameter) of the domain test.
const DOMAIN_BAND: f64 = 1e-4;
const MAX_HALVINGS: u32 = 40;

impl ParameterMap {
    /// `M_n` near the nest's parameter, for `n >= 2`; the nest must reach level `n - 1`.
    pub fn new(nest: &PrincipalNest, n: usize, sign: RescalingSign) -> Result<Self> {
        if n < 2 {
            return Err(Error::Precondition(format!(
                "the parameter map needs the rescaling at level n-1 >= 1, got n = {n}"
            )));
        }
        let r = rescaling_map(nest, n - 1, sign)?;
        Ok(Self {
            n,
            sign,
            c_ref: nest.c,
            w_ref: r.preimage,
            domain: None,
        })
    }

    /// Reject parameters outside `domain` (normally `Q(n)`).
    pub fn with_domain(mut self, domain: ParaPiece) -> Self {
        self.domain = Some(domain);
        self
    }

    fn inner_iterates(&self) -> usize {
        fibonacci(self.n) as usize
    }

    fn outer_iterates(&self) -> usize {
        fibonacci(self.n + 1) as usize
    }

    fn check_domain(&self, c: C64) -> Result<()> {
        let Some(d) = &self.domain else { return Ok(()) };
        if d.contains(c).unwrap_or(true) {
            return Ok(());
        }
        let dist = crate::geometry::distance_to_polyline(d.boundary(), c);
        if dist <= DOMAIN_BAND * d.piece.diameter() {
            return Ok(());
        }
        Err(Error::Precondition(format!("parameter {c} lies outside {}", d.piece.label)))
    }

    /// Zero of `f_c^{u(n)}` continued from `(c0, w0)` to `c1`.
    fn continue_zero(&self, c0: C64, w0: C64, c1: C64) -> Result<C64> {
        if c1 == c0 {
            return Ok(w0);
        }
        let m = self.inner_iterates();
        let (mut c, mut w) = (c0, w0);
        let mut t = 0.0f64;
        let mut dt = 1.0f64;
        let mut halvings = 0;
        while t < 1.0 {
            let step = dt.min(1.0 - t);
            let target = c0 + (c1 - c0) * (t + step);
            match zero_newton(target, w, m) {
                Some(nw) if (nw - w).norm() <= 0.1 * w.norm() => {
                    w = nw;
                    c = target;
                    t += step;
                    dt = (2.0 * step).min(1.0);
                }
                _ => {
                    halvings += 1;
                    if halvings > MAX_HALVINGS {
                        return Err(Error::Newton(format!(
                            "critical preimage lost continuing from {c} toward {c1}"
                        )));
                    }
                    dt = step / 2.0;
                }
            }
        }
        Ok(w)
    }

    fn value(&self, c: C64, w: C64) -> C64 {
        let g = QuadraticMap { c }.iterate(C64::new(0.0, 0.0), self.outer_iterates());
        self.sign.scale(w) * g
    }

    /// `M_n(c)` by continuation along the segment from the reference parameter.
    pub fn eval(&self, c: C64) -> Result<C64> {
        self.check_domain(c)?;
        let w = self.continue_zero(self.c_ref, self.w_ref, c)?;
        Ok(self.value(c, w))
    }

    /// `M_n` along a path, continuing `w_{n-1}` from one sample to the next.
    pub fn eval_path(&self, path: &[C64]) -> Result<ParameterMapSamples> {
        let mut samples = Vec::with_capacity(path.len());
        let Some(&first) = path.first() else {
            return Ok(ParameterMapSamples { n: self.n, samples });
        };
        let (mut c, mut w) = (self.c_ref, self.w_ref);
        for &next in std::iter::once(&first).chain(&path[1..]) {
            self.check_domain(next)?;
            w = self.continue_zero(c, w, next)?;
            c = next;
            samples.push((c, self.value(c, w)));
        }
        Ok(ParameterMapSamples { n: self.n, samples })
    }

    /// `M_n(c_k)` at a real superstable center, with the critical orbit in double-double
    /// so the value is not swamped by the rounding of `c_k`.
    pub fn eval_at_center(&self, center: &SuperstableCenter) -> Result<C64> {
        let c = C64::new(center.c, 0.0);
        self.check_domain(c)?;
        let w = self.continue_zero(self.c_ref, self.w_ref, c)?;
        let cc = TwoFloat::new_add(center.c, center.c_lo);
        let mut z = TwoFloat::from(0.0);
        for _ in 0..self.outer_iterates() {
            z = z * z + cc;
        }
        Ok(self.sign.scale(w) * z.hi())
    }
}

/// Newton for a zero of `f_c^m` from `seed`.
fn zero_newton(c: C64, seed: C64, m: usize) -> Option<C64> {
    let map = QuadraticMap { c };
    let mut w = seed;
    let mut prev = f64::INFINITY;
    for _ in 0..16 {
        let (v, d) = map.iterate_with_derivative(w, m);
        let step = v / d;
        if !step.re.is_finite() || !step.im.is_finite() {
            return None;
        }
        w -= step;
        let scale = w.norm().max(1e-300);
        // steps that stop shrinking at rounding level are accepted
        if step.norm() <= 1e-15 * scale || (step.norm() >= 0.5 * prev && step.norm() <= 1e-8 * scale) {
            return Some(w);
        }
        prev = step.norm();
    }
    None
}
