//! Locating real parameters by kneading order: the Fibonacci parameter and the
//! superstable centers `c_n` with `f^{u(n+1)}(0) = 0`.
//!
//! On the real slice of the family, the itinerary of the critical orbit is monotone in
//! `c` for the signed lexicographic order (a prefix with an odd number of negative
//! symbols reverses the comparison of the next symbol). Bisection in that order finds
//! a parameter with a prescribed itinerary without any risk of converging to another
//! root of the same polynomial.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::puzzle::{check_fibonacci_combinatorics, fibonacci};
use crate::quaddyn::QuadraticMap;

/// Sign sequence of `f^i(0)`, `i >= 1`, of the Fibonacci kneading, `len` symbols.
/// Built by the cutting-times rule: each new block repeats the prefix of length
/// `u(k-1)` with its last symbol flipped.
pub fn fibonacci_kneading(len: usize) -> Vec<i8> {
    let mut nu = vec![-1i8];
    let mut k = 2;
    while nu.len() < len {
        let d = (fibonacci(k) - fibonacci(k - 1)) as usize;
        let mut block = nu[..d].to_vec();
        let last = block.len() - 1;
        block[last] = -block[last];
        nu.extend(block);
        k += 1;
    }
    nu.truncate(len);
    nu
}

/// Signs of `f_c^i(0)` for `i = 1..=len` (0 on an exact zero).
pub fn itinerary(c: f64, len: usize) -> Vec<i8> {
    let mut z = 0.0f64;
    (0..len)
        .map(|_| {
            z = z * z + c;
            if z > 0.0 {
                1
            } else if z < 0.0 {
                -1
            } else {
                0
            }
        })
        .collect()
}

/// Signed lexicographic comparison of itineraries; `None` when they agree on the
/// common length.
pub fn kneading_cmp(a: &[i8], b: &[i8]) -> Option<Ordering> {
    let j = a.iter().zip(b).position(|(x, y)| x != y)?;
    let flips = a[..j].iter().filter(|&&s| s < 0).count() % 2 == 1;
    let ord = a[j].cmp(&b[j]);
    Some(if flips { ord.reverse() } else { ord })
}

/// Real parameter range searched for Fibonacci combinatorics.
const BRACKET: (f64, f64) = (-2.0, -0.75);

/// Bisection on `[lo, hi]` for the parameter whose itinerary equals `target`.
/// Returns the final bracket and whether the target was resolved to the end.
fn kneading_bisect(target: &[i8], mut lo: f64, mut hi: f64, tol: f64) -> ((f64, f64), Option<String>) {
    let len = target.len();
    let side_lo = kneading_cmp(&itinerary(lo, len), target);
    let side_hi = kneading_cmp(&itinerary(hi, len), target);
    if side_lo.is_none() || side_lo == side_hi {
        return ((lo, hi), Some("bracket ends do not straddle the target itinerary".into()));
    }
    for _ in 0..2000 {
        if hi - lo <= tol {
            return ((lo, hi), None);
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return ((lo, hi), Some("bracket reached adjacent floating-point numbers".into()));
        }
        match kneading_cmp(&itinerary(mid, len), target) {
            None => {
                return (
                    (lo, hi),
                    Some(format!("itinerary resolved through {len} symbols at {mid}")),
                )
            }
            s if s == side_lo => lo = mid,
            _ => hi = mid,
        }
    }
    ((lo, hi), Some("bisection budget exhausted".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FibonacciParameter {
    pub c: f64,
    pub bracket: (f64, f64),
    /// Low word of the double-double refinement: `c_fib ≈ c + c_lo`.
    pub c_lo: f64,
    pub diagnostic: Option<String>,
}

impl FibonacciParameter {
    /// The closest-return test through `u(levels)` on the double-double critical orbit
    /// at `c + c_lo`. Double precision loses the test near `u(11)`: an error of one ulp
    /// in `c` grows to about `1e-6` by iterate 144.
    pub fn closest_return_violation(&self, levels: usize) -> Option<String> {
        if levels < 2 {
            return None;
        }
        let c = TwoFloat::new_add(self.c, self.c_lo);
        let mut z = TwoFloat::from(0.0);
        let orbit: Vec<f64> = std::iter::once(0.0)
            .chain((0..fibonacci(levels)).map(|_| {
                z = z * z + c;
                z.hi().abs()
            }))
            .collect();
        crate::puzzle::closest_return_violation(&orbit, levels)
    }
}

/// Kneading length used to pin down the Fibonacci parameter.
const KNEADING_LEN: usize = 14;
/// Longer kneading prefix for the double-double refinement.
const KNEADING_LEN_DD: usize = 17;

fn sign(z: TwoFloat) -> i8 {
    match z.hi().partial_cmp(&0.0) {
        Some(Ordering::Greater) => 1,
        Some(Ordering::Less) => -1,
        _ => 0,
    }
}

fn itinerary_dd(c: TwoFloat, len: usize) -> Vec<i8> {
    let mut z = TwoFloat::from(0.0);
    (0..len)
        .map(|_| {
            z = z * z + c;
            sign(z)
        })
        .collect()
}

/// [`kneading_bisect`] in double-double from the full search range, stopped once the
/// bracket no longer shrinks or the target itinerary is matched.
fn kneading_bisect_dd(target: &[i8]) -> TwoFloat {
    let len = target.len();
    let (mut lo, mut hi) = (TwoFloat::from(BRACKET.0), TwoFloat::from(BRACKET.1));
    let side_lo = kneading_cmp(&itinerary_dd(lo, len), target);
    for _ in 0..200 {
        let mid = (lo + hi) * 0.5;
        if !(mid > lo && mid < hi) {
            break;
        }
        match kneading_cmp(&itinerary_dd(mid, len), target) {
            None => return mid,
            s if s == side_lo => lo = mid,
            _ => hi = mid,
        }
    }
    (lo + hi) * 0.5
}

/// The real Fibonacci parameter, bracketed to width below `tol` (at least `1e-13`)
/// by double-precision bisection, then refined in double-double.
pub fn find_fibonacci_parameter(tol: f64) -> Result<FibonacciParameter> {
    if !(tol >= 1e-13) {
        return Err(Error::Precondition(format!("tolerance {tol:e} is below 1e-13")));
    }
    let target = fibonacci_kneading(fibonacci(KNEADING_LEN) as usize);
    let ((lo, hi), mut diagnostic) = kneading_bisect(&target, BRACKET.0, BRACKET.1, tol);
    let c = 0.5 * (lo + hi);
    let fine = kneading_bisect_dd(&fibonacci_kneading(fibonacci(KNEADING_LEN_DD) as usize));
    if !(fine.hi() >= lo && fine.hi() <= hi) {
        diagnostic.get_or_insert_with(|| {
            format!("double-double refinement {} left the bracket", fine.hi())
        });
    }
    Ok(FibonacciParameter {
        c,
        bracket: (lo, hi),
        c_lo: (fine - c).hi(),
        diagnostic,
    })
}

/// A superstable parameter of Fibonacci type: `f^{u(n+1)}_c(0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperstableCenter {
    pub n: usize,
    pub return_time: u128,
    /// Nearest double to `c_n`.
    pub c: f64,
    /// Low word: `c_n ≈ c + c_lo` in double-double.
    pub c_lo: f64,
    /// `|f^{u(n+1)}(0)|` evaluated in double-double at `c + c_lo`.
    pub residual: f64,
}

impl SuperstableCenter {
    pub fn csv_header() -> &'static str {
        "n,u(n+1),c_n,residual"
    }

    pub fn csv_row(&self) -> String {
        format!("{},{},{:?},{:e}", self.n, self.return_time, self.c, self.residual)
    }
}

/// `f_c^p(0)` and its derivative in `c`, in double-double.
fn orbit_dd(c: TwoFloat, p: usize) -> (TwoFloat, TwoFloat) {
    let mut z = TwoFloat::from(0.0);
    let mut d = TwoFloat::from(0.0);
    for _ in 0..p {
        d = z * d * 2.0 + 1.0;
        z = z * z + c;
    }
    (z, d)
}

/// Deepest level whose center is separated from its neighbours in double precision.
pub const MAX_CENTER_LEVEL: usize = 11;

/// The superstable center at level `n >= 1`.
pub fn find_superstable(n: usize) -> Result<SuperstableCenter> {
    if n == 0 || n > MAX_CENTER_LEVEL {
        return Err(Error::Precondition(format!(
            "level {n} is outside 1..={MAX_CENTER_LEVEL}; deeper centers are closer to each other than double precision resolves"
        )));
    }
    let p = fibonacci(n + 1) as usize;
    let mut target = fibonacci_kneading(p - 1);
    target.push(0);
    let ((lo, hi), diag) = kneading_bisect(&target, BRACKET.0, BRACKET.1, 0.0);
    if let Some(d) = &diag {
        if !d.contains("adjacent") && !d.contains("resolved") {
            return Err(Error::Newton(format!("superstable center {n}: {d}")));
        }
    }
    let mut c = TwoFloat::from(0.5 * (lo + hi));
    for _ in 0..8 {
        let (z, d) = orbit_dd(c, p);
        let step = z / d;
        c -= step;
        if step.hi().abs() <= 1e-31 * c.hi().abs() {
            break;
        }
    }
    let (z, _) = orbit_dd(c, p);
    let residual = z.hi().abs();
    if !(residual < 1e-12) {
        return Err(Error::Newton(format!("superstable center {n}: residual {residual:e}")));
    }
    if !(c.hi() >= lo - 1e-12 && c.hi() <= hi + 1e-12) {
        return Err(Error::Newton(format!("superstable center {n}: polish left the kneading bracket")));
    }
    let map = QuadraticMap::real(c.hi())?;
    if !check_fibonacci_combinatorics(&map, n) {
        return Err(Error::Combinatorics(format!(
            "superstable center {n} at {} fails the closest-return test",
            c.hi()
        )));
    }
    Ok(SuperstableCenter {
        n,
        return_time: p as u128,
        c: c.hi(),
        c_lo: c.lo(),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kneading_matches_superstable_itineraries() {
        // oracle: direct orbits at known superstable parameters
        let nu = fibonacci_kneading(12);
        assert_eq!(&nu[..4], &[-1, 1, 1, -1]);
        let c2 = -1.7548776662466927;
        assert_eq!(&itinerary(c2, 2)[..], &nu[..2]);
        let c3 = -1.8607825222048548;
        assert_eq!(&itinerary(c3, 4)[..], &nu[..4]);
    }

    #[test]
    fn kneading_order_is_monotone_in_c() {
        let t = fibonacci_kneading(30);
        assert_eq!(kneading_cmp(&itinerary(-2.0, 30), &t), Some(Ordering::Less));
        assert_eq!(kneading_cmp(&itinerary(-1.75, 30), &t), Some(Ordering::Greater));
        assert_eq!(kneading_cmp(&itinerary(-1.87, 30), &t), Some(Ordering::Greater));
        assert_eq!(kneading_cmp(&itinerary(-1.871, 30), &t), Some(Ordering::Less));
    }

    #[test]
    fn first_centers() {
        let c1 = find_superstable(1).unwrap();
        assert_eq!(c1.c, -1.0);
        let c2 = find_superstable(2).unwrap();
        // oracle: real root of c^3 + 2c^2 + c + 1 = 0 (f^3(0) = 0 with c != 0)
        let r = c2.c;
        assert!((r * r * r + 2.0 * r * r + r + 1.0).abs() < 1e-14);
    }

    #[test]
    fn coarse_bracket_contains_refined_value() {
        let fine = find_fibonacci_parameter(1e-13).unwrap();
        let coarse = find_fibonacci_parameter(0.5).unwrap();
        assert!(coarse.bracket.0 <= fine.c && fine.c <= coarse.bracket.1);
        assert!((fine.bracket.1 - fine.bracket.0) < 1e-13);
        assert!(fine.c > -2.0 && fine.c < -0.75);
        assert!((fine.c + 1.8705286321646449).abs() < 1e-13);
    }
}
