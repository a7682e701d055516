//! Exact rational external angles and angle positions along equipotential arcs.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// An external angle `numerator / denominator` in turns, kept reduced and in `[0, 1)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "AngleRepr", into = "AngleRepr")]
pub struct ExternalAngle {
    num: u128,
    den: u128,
}

/// Serialized as the string `"num/den"` so 128-bit denominators survive JSON.
#[derive(Serialize, Deserialize)]
#[serde(transparent)]
struct AngleRepr(String);

impl TryFrom<AngleRepr> for ExternalAngle {
    type Error = Error;
    fn try_from(r: AngleRepr) -> Result<Self> {
        r.0.parse()
    }
}

impl From<ExternalAngle> for AngleRepr {
    fn from(a: ExternalAngle) -> Self {
        AngleRepr(a.to_string())
    }
}

impl std::str::FromStr for ExternalAngle {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Serde(format!("malformed angle {s:?}, expected num/den"));
        let (n, d) = s.trim().split_once('/').unwrap_or((s.trim(), "1"));
        let num = n.trim().parse::<u128>().map_err(|_| bad())?;
        let den = d.trim().parse::<u128>().map_err(|_| bad())?;
        ExternalAngle::new(num, den)
    }
}

impl ExternalAngle {
    pub const ZERO: ExternalAngle = ExternalAngle { num: 0, den: 1 };

    pub fn new(num: u128, den: u128) -> Result<Self> {
        if den == 0 {
            return Err(Error::Domain("angle denominator must be positive".into()));
        }
        if num >= den {
            return Err(Error::Domain(format!("angle {num}/{den} is not in [0, 1)")));
        }
        Ok(Self::reduced(num, den))
    }

    fn reduced(num: u128, den: u128) -> Self {
        if num == 0 {
            return Self::ZERO;
        }
        let g = gcd(num, den);
        Self {
            num: num / g,
            den: den / g,
        }
    }

    pub fn numerator(&self) -> u128 {
        self.num
    }

    pub fn denominator(&self) -> u128 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `2θ mod 1`.
    pub fn double(&self) -> Self {
        Self::reduced((2 * self.num) % self.den, self.den)
    }

    /// `θ/2` or `θ/2 + 1/2`.
    pub fn half(&self, upper: bool) -> Result<Self> {
        let den = self
            .den
            .checked_mul(2)
            .ok_or_else(|| Error::AngleBudget("denominator overflow".into()))?;
        let num = if upper { self.num + self.den } else { self.num };
        Ok(Self::reduced(num, den))
    }

    /// Fractional part of `2^k θ`, exact in the rational arithmetic before conversion.
    pub fn doubled_frac(&self, k: u32) -> f64 {
        let mut num = self.num;
        for _ in 0..k {
            num = (2 * num) % self.den;
        }
        num as f64 / self.den as f64
    }

    /// Exact `2^k θ mod 1`.
    pub fn doubled(&self, k: u32) -> Self {
        let mut num = self.num;
        for _ in 0..k {
            num = (2 * num) % self.den;
        }
        Self::reduced(num, self.den)
    }

    /// Preperiod and period of the angle under doubling.
    pub fn preperiod_period(&self) -> (u32, u32) {
        let mut seen: Vec<u128> = Vec::new();
        let mut num = self.num;
        loop {
            if let Some(pos) = seen.iter().position(|&n| n == num) {
                return (pos as u32, (seen.len() - pos) as u32);
            }
            seen.push(num);
            num = (2 * num) % self.den;
        }
    }

    /// Counterclockwise distance from `self` to `other`, as an exact fraction
    /// `(num, den)` in `[0, 1)`.
    pub fn ccw_span_to(&self, other: &ExternalAngle) -> (u128, u128) {
        let den = lcm(self.den, other.den);
        let a = self.num * (den / self.den);
        let b = other.num * (den / other.den);
        let num = if b >= a { b - a } else { den + b - a };
        let g = gcd(num, den).max(1);
        (num / g, den / g)
    }

    pub fn add_turns(&self, num: u128, den: u128) -> Self {
        let l = lcm(self.den, den);
        let a = self.num * (l / self.den) + num * (l / den);
        Self::reduced(a % l, l)
    }
}

/// Compares `a/b` with `c/d` without forming cross products.
pub(crate) fn cmp_fraction(mut a: u128, mut b: u128, mut c: u128, mut d: u128) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    loop {
        let (qa, qc) = (a / b, c / d);
        if qa != qc {
            return qa.cmp(&qc);
        }
        let (ra, rc) = (a % b, c % d);
        match (ra == 0, rc == 0) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        // ra/b < rc/d  <=>  d/rc < b/ra
        (a, b, c, d) = (d, rc, b, ra);
    }
}

impl Ord for ExternalAngle {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        cmp_fraction(self.num, self.den, other.num, other.den)
    }
}

impl PartialOrd for ExternalAngle {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

fn lcm(a: u128, b: u128) -> u128 {
    a / gcd(a, b) * b
}

impl fmt::Debug for ExternalAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl fmt::Display for ExternalAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// A position `base + offset` turns on the circle of angles, where `base` is exact
/// and `offset` is a small real. Doubling stays accurate to full precision because
/// only the offset is scaled in floating point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnglePoint {
    pub base: ExternalAngle,
    pub offset: f64,
}

impl AnglePoint {
    pub fn exact(base: ExternalAngle) -> Self {
        Self { base, offset: 0.0 }
    }

    pub fn new(base: ExternalAngle, offset: f64) -> Self {
        Self { base, offset }
    }

    /// Fractional part of `2^k (base + offset)`.
    pub fn doubled_frac(&self, k: u32) -> f64 {
        let t = self.base.doubled_frac(k) + self.offset * (k as f64).exp2();
        t - t.floor()
    }

    pub fn to_f64(&self) -> f64 {
        let t = self.base.to_f64() + self.offset;
        t - t.floor()
    }

    /// Preimage angle under doubling: `(base + offset)/2 (+ 1/2)`.
    pub fn half(&self, upper: bool) -> Result<Self> {
        Ok(Self {
            base: self.base.half(upper)?,
            offset: self.offset / 2.0,
        })
    }

    pub fn double(&self) -> Self {
        Self {
            base: self.base.double(),
            offset: self.offset * 2.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_and_range() {
        let a = ExternalAngle::new(2, 6).unwrap();
        assert_eq!((a.numerator(), a.denominator()), (1, 3));
        assert!(ExternalAngle::new(3, 3).is_err());
        assert!(ExternalAngle::new(1, 0).is_err());
    }

    #[test]
    fn doubling_permutes_thirds() {
        let third = ExternalAngle::new(1, 3).unwrap();
        assert_eq!(third.double(), ExternalAngle::new(2, 3).unwrap());
        assert_eq!(third.double().double(), third);
        assert_eq!(third.preperiod_period(), (0, 2));
        let sixth = ExternalAngle::new(1, 6).unwrap();
        assert_eq!(sixth.preperiod_period(), (1, 2));
        assert_eq!(ExternalAngle::ZERO.preperiod_period(), (0, 1));
        assert_eq!(ExternalAngle::new(1, 2).unwrap().preperiod_period(), (1, 1));
    }

    #[test]
    fn halves_double_back() {
        let a = ExternalAngle::new(5, 24).unwrap();
        for upper in [false, true] {
            assert_eq!(a.half(upper).unwrap().double(), a);
        }
    }

    #[test]
    fn ccw_span_wraps() {
        let a = ExternalAngle::new(2, 3).unwrap();
        let b = ExternalAngle::new(1, 3).unwrap();
        assert_eq!(a.ccw_span_to(&b), (2, 3));
        assert_eq!(b.ccw_span_to(&a), (1, 3));
    }

    #[test]
    fn numeric_order() {
        let a = ExternalAngle::new(1, 3).unwrap();
        let b = ExternalAngle::new(3, 8).unwrap();
        let big = ExternalAngle::new((1u128 << 100) / 3, 1u128 << 100).unwrap();
        assert!(a < b);
        assert!(big < a);
        assert!(ExternalAngle::ZERO < big);
        assert_eq!(a.cmp(&ExternalAngle::new(2, 6).unwrap()), std::cmp::Ordering::Equal);
    }

    #[test]
    fn parses_and_serializes_as_fraction() {
        let a: ExternalAngle = "4/6".parse().unwrap();
        assert_eq!(a, ExternalAngle::new(2, 3).unwrap());
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, "\"2/3\"");
        let back: ExternalAngle = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
        assert!("1/0".parse::<ExternalAngle>().is_err());
        assert!("x".parse::<ExternalAngle>().is_err());
    }

    #[test]
    fn deep_doubling_is_exact() {
        let den = 3u128 << 60;
        let a = ExternalAngle::new(7, den).unwrap();
        assert_eq!(a.doubled(60), ExternalAngle::new(7 % 3, 3).unwrap());
        let p = AnglePoint::new(a, 1e-20);
        assert!((p.doubled_frac(60) - (1.0 / 3.0 + 1e-20 * 2f64.powi(60))).abs() < 1e-12);
    }
}
