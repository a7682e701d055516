//! Randomized invariance laws shared by the property and acceptance targets.
//! Every law runs under a fixed seed, so failures reproduce exactly.

#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestCaseError, TestRunner};
use yoccoz::conformal::{capacity, circle, modulus, AnnulusSpec, Pole};
use yoccoz::parapuzzle::parameter_green;
use yoccoz::quaddyn::{green_value, ray_point, AnglePoint, ExternalAngle, Profile, QuadraticMap};
use yoccoz::Complex64 as C64;

fn runner(seed: u64, cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: None,
        ..Config::default()
    })
}

fn outcome<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

/// An ellipse with semi-axes `a`, `b` rotated by `phi`.
fn ellipse(center: C64, a: f64, b: f64, phi: f64, n: usize) -> Vec<C64> {
    let rot = C64::from_polar(1.0, phi);
    (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            center + rot * C64::new(a * t.cos(), b * t.sin())
        })
        .collect()
}

fn affine(curve: &[C64], lambda: C64, b: C64) -> Vec<C64> {
    curve.iter().map(|z| lambda * z + b).collect()
}

fn scale_and_shift() -> impl Strategy<Value = (C64, C64)> {
    (-1.6f64..1.6, 0.0..std::f64::consts::TAU, -5.0f64..5.0, -5.0f64..5.0)
        .prop_map(|(log_r, arg, bx, by)| (C64::from_polar(log_r.exp(), arg), C64::new(bx, by)))
}

fn parameter() -> impl Strategy<Value = C64> {
    (-2.0f64..0.5, -1.2f64..1.2).prop_map(|(re, im)| C64::new(re, im))
}

fn angle() -> impl Strategy<Value = ExternalAngle> {
    (1u32..12, 0u32..4).prop_flat_map(|(k, odd)| {
        let den = (1u128 << k) * [1u128, 3, 5, 7][odd as usize];
        (0..den).prop_map(move |num| ExternalAngle::new(num, den).unwrap())
    })
}

pub fn modulus_is_affine_invariant() -> Result<(), String> {
    let strategy = (
        scale_and_shift(),
        1.2f64..2.0,
        0.6f64..1.0,
        0.0f64..3.0,
        (-0.2f64..0.2, -0.2f64..0.2, 0.25f64..0.45),
    );
    outcome(runner(0x5eed_0001, 12).run(&strategy, |((lambda, b), a, ecc, phi, (cx, cy, r))| {
        let outer = ellipse(C64::new(0.0, 0.0), a, a * ecc, phi, 600);
        let inner = circle(C64::new(cx, cy), r, 300);
        let m0 = modulus(&AnnulusSpec::new(outer.clone(), inner.clone()).unwrap(), 256, 1e-9).unwrap();
        let spec = AnnulusSpec::new(affine(&outer, lambda, b), affine(&inner, lambda, b)).unwrap();
        let m1 = modulus(&spec, 256, 1e-9).unwrap();
        // the grid is not rotation invariant: compare within the resolution sensitivity
        let tol = 2.0 * (m0.change() + m1.change()) + 1e-3;
        prop_assert!(
            (m0.richardson - m1.richardson).abs() <= tol,
            "{} vs {} (tol {tol})",
            m0.richardson,
            m1.richardson
        );
        Ok(())
    }))
}

pub fn capacity_translation_and_scale() -> Result<(), String> {
    let strategy = (
        scale_and_shift(),
        0.5f64..1.5,
        0.5f64..1.0,
        0.0f64..3.0,
        (-0.2f64..0.2, -0.2f64..0.2),
    );
    outcome(runner(0x5eed_0002, 12).run(&strategy, |((lambda, b), a, ecc, phi, (px, py))| {
        let u = ellipse(C64::new(0.0, 0.0), a, a * ecc, phi, 800);
        let v = affine(&u, lambda, b);
        let p = C64::new(px, py) * a * ecc;
        let shift = lambda.norm().ln();

        let c0 = capacity(&u, Pole::Point(p), 256, 1e-10).unwrap();
        let c1 = capacity(&v, Pole::Point(lambda * p + b), 256, 1e-10).unwrap();
        let tol = 2.0 * (c0.change() + c1.change()) + 2e-3;
        prop_assert!(
            (c1.richardson - (c0.richardson + shift)).abs() <= tol,
            "point: {} vs {} + {shift}",
            c1.richardson,
            c0.richardson
        );

        let i0 = capacity(&u, Pole::Infinity, 256, 1e-10).unwrap();
        let i1 = capacity(&v, Pole::Infinity, 256, 1e-10).unwrap();
        let tol = 2.0 * (i0.change() + i1.change()) + 2e-3;
        prop_assert!(
            (i1.richardson - (i0.richardson - shift)).abs() <= tol,
            "infinity: {} vs {} - {shift}",
            i1.richardson,
            i0.richardson
        );
        Ok(())
    }))
}

pub fn green_functional_equation() -> Result<(), String> {
    let strategy = (parameter(), 2.5f64..20.0, 0.0f64..std::f64::consts::TAU);
    outcome(runner(0x5eed_0003, 256).run(&strategy, |(c, r, t)| {
        // |z| >= 2.5 escapes for every |c| <= 2.1
        let map = QuadraticMap::new(c).unwrap();
        let z = C64::from_polar(r, t);
        let p = Profile::default();
        let g = green_value(&map, z, p.max_iter, p.green_bailout).unwrap();
        let g2 = green_value(&map, map.forward(z), p.max_iter, p.green_bailout).unwrap();
        prop_assert!(g > 0.0);
        prop_assert!((g2 - 2.0 * g).abs() <= 1e-10 * g2, "{g2} vs 2 * {g}");
        Ok(())
    }))
}

pub fn parameter_green_is_the_green_of_the_critical_value() -> Result<(), String> {
    let strategy = (-3.0f64..3.0, -3.0f64..3.0);
    outcome(runner(0x5eed_0005, 256).run(&strategy, |(re, im)| {
        let c = C64::new(re, im);
        let p = Profile::default();
        let map = QuadraticMap::new(c).unwrap();
        let a = parameter_green(c, p.max_iter, p.green_bailout).unwrap();
        let b = green_value(&map, c, p.max_iter, p.green_bailout).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b), "{a} vs {b}");
        Ok(())
    }))
}

pub fn rays_are_covariant_under_doubling() -> Result<(), String> {
    let strategy = (
        prop::sample::select(vec![
            C64::new(-1.0, 0.0),
            C64::new(-1.8705286321646, 0.0),
            C64::new(0.25, 0.0),
            C64::new(-0.12, 0.75),
            C64::new(0.3, 0.5),
        ]),
        angle(),
        0.05f64..2.0,
    );
    outcome(runner(0x5eed_0004, 96).run(&strategy, |(c, theta, g)| {
        let map = QuadraticMap::new(c).unwrap();
        let p = Profile::default();
        let z = ray_point(&map, AnglePoint::exact(theta), g, &p).unwrap();
        let w = ray_point(&map, AnglePoint::exact(theta.double()), 2.0 * g, &p).unwrap();
        let fz = map.forward(z);
        if (fz - w).norm() > 1e-8 * (1.0 + w.norm()) {
            return Err(TestCaseError::fail(format!("{fz} vs {w}")));
        }
        Ok(())
    }))
}

pub const LAWS: &[(&str, fn() -> Result<(), String>)] = &[
    ("modulus is affine invariant", modulus_is_affine_invariant),
    ("capacity under translation and scaling", capacity_translation_and_scale),
    ("green functional equation", green_functional_equation),
    ("parameter green equals the green of c", parameter_green_is_the_green_of_the_critical_value),
    ("rays are covariant under doubling", rays_are_covariant_under_doubling),
];
