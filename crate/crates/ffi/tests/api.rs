use std::ffi::{CStr, CString};
use std::ptr;

use yoccoz_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(yz_last_error()) }.to_string_lossy().into_owned()
}

fn circle_json(r: f64, n: usize) -> CString {
    let pts: Vec<[f64; 2]> = (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            [r * t.cos(), r * t.sin()]
        })
        .collect();
    let v = serde_json::json!({
        "depth": 0,
        "label": "generic",
        "combinatorics": {"level": 1.0, "arcs": []},
        "arcs": [{"kind": "equipotential", "angles": [], "potentials": [1.0], "points": pts}],
    });
    CString::new(v.to_string()).unwrap()
}

#[test]
fn scalar_entry_points() {
    let mut c = 0.0;
    assert_eq!(unsafe { yz_fibonacci_parameter(&mut c) }, YzStatus::Ok);
    assert!((c + 1.8705286321646).abs() < 1e-10);
    let (mut c1, mut res) = (0.0, 1.0);
    assert_eq!(unsafe { yz_superstable_center(1, &mut c1, &mut res) }, YzStatus::Ok);
    assert_eq!((c1, res), (-1.0, 0.0));
    assert_eq!(unsafe { yz_superstable_center(0, &mut c1, &mut res) }, YzStatus::InvalidArgument);
    assert!(last_error().contains("level 0"));
    // G = log|z| for z^2
    let mut g = 0.0;
    assert_eq!(unsafe { yz_green(0.0, 0.0, 3.0, 0.0, &mut g) }, YzStatus::Ok);
    assert!((g - 3f64.ln()).abs() < 1e-12);
    let mut gp = 0.0;
    assert_eq!(unsafe { yz_parameter_green(1.0, 1.0, &mut gp) }, YzStatus::Ok);
    assert_eq!(unsafe { yz_green(1.0, 1.0, 1.0, 1.0, &mut g) }, YzStatus::Ok);
    assert!((gp - g).abs() < 1e-12);
    assert_eq!(unsafe { yz_green(0.0, 0.0, 3.0, 0.0, ptr::null_mut()) }, YzStatus::NullPointer);
    assert_eq!(last_error(), "out is null");
}

#[test]
fn status_names_are_static_strings() {
    let s = unsafe { CStr::from_ptr(yz_status_name(YzStatus::Truncated)) };
    assert_eq!(s.to_str().unwrap(), "truncated");
}

#[test]
fn nest_and_piece_handles() {
    let mut c = 0.0;
    unsafe { yz_fibonacci_parameter(&mut c) };
    let mut nest = ptr::null_mut();
    assert_eq!(unsafe { yz_nest_build(c, 0.0, 3, 1.0, &mut nest) }, YzStatus::Ok);
    let mut depth = 0;
    assert_eq!(unsafe { yz_nest_depth(nest, &mut depth) }, YzStatus::Ok);
    assert_eq!(depth, 3);

    let (mut v2, mut v3) = (ptr::null_mut(), ptr::null_mut());
    assert_eq!(unsafe { yz_nest_central(nest, 2, &mut v2) }, YzStatus::Ok);
    assert_eq!(unsafe { yz_nest_central(nest, 3, &mut v3) }, YzStatus::Ok);
    assert_eq!(unsafe { yz_nest_central(nest, 4, &mut v3) }, YzStatus::InvalidArgument);
    unsafe { yz_nest_free(nest) };

    let mut inside = false;
    assert_eq!(unsafe { yz_piece_contains(v3, 0.0, 0.0, &mut inside) }, YzStatus::Ok);
    assert!(inside);

    let mut len = 0;
    assert_eq!(unsafe { yz_piece_boundary(v2, ptr::null_mut(), 0, &mut len) }, YzStatus::BufferTooSmall);
    let mut xy = vec![0.0; 2 * len];
    assert_eq!(unsafe { yz_piece_boundary(v2, xy.as_mut_ptr(), len, &mut len) }, YzStatus::Ok);
    assert!(xy.iter().all(|x| x.is_finite()));

    let mut e = YzEstimate::default();
    assert_eq!(unsafe { yz_modulus(v2, v3, 256, 1e-8, &mut e) }, YzStatus::Ok);
    assert!((e.richardson - 0.82).abs() < 0.02, "{e:?}");
    assert_eq!(unsafe { yz_modulus(v3, v2, 256, 1e-8, &mut e) }, YzStatus::Combinatorics);

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { yz_piece_to_json(v3, &mut json) }, YzStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { yz_piece_from_json(json, &mut back) }, YzStatus::Ok);
    let mut n2 = 0;
    unsafe { yz_piece_boundary(back, ptr::null_mut(), 0, &mut n2) };
    let mut n3 = 0;
    unsafe { yz_piece_boundary(v3, ptr::null_mut(), 0, &mut n3) };
    assert_eq!(n2, n3);
    unsafe {
        yz_string_free(json);
        yz_piece_free(back);
        yz_piece_free(v2);
        yz_piece_free(v3);
    }
}

#[test]
fn capacity_of_a_disc_and_bad_json() {
    let j = circle_json(0.5, 800);
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { yz_piece_from_json(j.as_ptr(), &mut p) }, YzStatus::Ok);
    let mut e = YzEstimate::default();
    assert_eq!(unsafe { yz_capacity(p, false, 0.0, 0.0, 256, 1e-9, &mut e) }, YzStatus::Ok);
    assert!((e.richardson - 0.5f64.ln()).abs() < 0.01, "{e:?}");
    assert_eq!(unsafe { yz_capacity(p, false, 2.0, 0.0, 256, 1e-9, &mut e) }, YzStatus::InvalidArgument);
    unsafe { yz_piece_free(p) };

    let bad = CString::new("{\"depth\": ").unwrap();
    assert_eq!(unsafe { yz_piece_from_json(bad.as_ptr(), &mut p) }, YzStatus::Serialization);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { yz_piece_from_json(ptr::null(), &mut p) }, YzStatus::NullPointer);
}
