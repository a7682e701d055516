//! Randomized invariance laws with fixed seeds.

mod common;

#[test]
fn modulus_is_affine_invariant() {
    common::modulus_is_affine_invariant().unwrap();
}

#[test]
fn capacity_translation_and_scale() {
    common::capacity_translation_and_scale().unwrap();
}

#[test]
fn green_functional_equation() {
    common::green_functional_equation().unwrap();
}

#[test]
fn parameter_green_is_the_green_of_the_critical_value() {
    common::parameter_green_is_the_green_of_the_critical_value().unwrap();
}

#[test]
fn rays_are_covariant_under_doubling() {
    common::rays_are_covariant_under_doubling().unwrap();
}
