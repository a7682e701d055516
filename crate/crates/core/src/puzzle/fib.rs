use num_complex::Complex64 as C64;

use crate::quaddyn::QuadraticMap;

/// `u(0) = u(1) = 1`, `u(n) = u(n-1) + u(n-2)`.
pub fn fibonacci(n: usize) -> u128 {
    let (mut a, mut b) = (1u128, 1u128);
    for _ in 0..n {
        (a, b) = (b, a + b);
    }
    a
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FibonacciSeq {
    pub values: Vec<u128>,
}

impl FibonacciSeq {
    pub fn up_to(n: usize) -> Self {
        Self {
            values: (0..=n).map(fibonacci).collect(),
        }
    }
}

/// The first violated closest-return condition, or `None` when
/// `|f^{u(n)}(0)| < |f^{u(n-1)}(0)| < |f^i(0)|` holds for `u(n-1) < i < u(n)`, `2 <= n <= levels`.
pub fn fibonacci_violation(map: &QuadraticMap, levels: usize) -> Option<String> {
    if levels < 2 {
        return None;
    }
    let last = fibonacci(levels) as usize;
    let mut orbit = Vec::with_capacity(last + 1);
    let mut z = C64::new(0.0, 0.0);
    orbit.push(z.norm());
    let escape = map.default_escape_radius();
    for i in 1..=last {
        z = map.forward(z);
        if !(z.norm() <= escape) {
            return Some(format!("critical orbit escapes at iterate {i}"));
        }
        orbit.push(z.norm());
    }
    closest_return_violation(&orbit, levels)
}

/// The closest-return test on `|f^i(0)|`, `i = 0..=u(levels)`.
pub(crate) fn closest_return_violation(orbit: &[f64], levels: usize) -> Option<String> {
    for n in 2..=levels {
        let (un, um) = (fibonacci(n) as usize, fibonacci(n - 1) as usize);
        if !(orbit[un] < orbit[um]) {
            return Some(format!(
                "|f^{un}(0)| = {:e} is not below |f^{um}(0)| = {:e}",
                orbit[un], orbit[um]
            ));
        }
        for (i, r) in orbit.iter().enumerate().take(un).skip(um + 1) {
            if !(orbit[um] < *r) {
                return Some(format!(
                    "|f^{i}(0)| = {r:e} comes closer than |f^{um}(0)| = {:e}",
                    orbit[um]
                ));
            }
        }
    }
    None
}

pub fn check_fibonacci_combinatorics(map: &QuadraticMap, levels: usize) -> bool {
    fibonacci_violation(map, levels).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fibonacci_values() {
        assert_eq!(fibonacci(0), 1);
        assert_eq!(fibonacci(1), 1);
        assert_eq!(fibonacci(2), 2);
        // oracle: unrolled recurrence
        let mut v = vec![1u128, 1];
        for n in 2..=12 {
            let x = v[n - 1] + v[n - 2];
            v.push(x);
        }
        assert_eq!(fibonacci(7), 21);
        assert_eq!(fibonacci(12), v[12]);
        assert_eq!(FibonacciSeq::up_to(5).values, vec![1, 1, 2, 3, 5, 8]);
    }

    #[test]
    fn chebyshev_fails_closest_returns() {
        let m = QuadraticMap::real(-2.0).unwrap();
        assert!(!check_fibonacci_combinatorics(&m, 3));
        assert!(check_fibonacci_combinatorics(&m, 1));
    }

    #[test]
    fn escaping_orbit_is_reported() {
        let m = QuadraticMap::real(-2.5).unwrap();
        let why = fibonacci_violation(&m, 5).unwrap();
        assert!(why.contains("escapes"));
    }
}
