//! Compiles and runs a small C program against the generated header and static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <math.h>
#include "yoccoz.h"

int main(void) {
    double c = 0.0;
    if (yz_fibonacci_parameter(&c) != YZ_STATUS_OK) return 1;
    if (fabs(c + 1.8705286321646) > 1e-10) return 2;
    YzNest *nest = NULL;
    if (yz_nest_build(c, 0.0, 2, 1.0, &nest) != YZ_STATUS_OK) return 3;
    YzPiece *v1 = NULL, *v2 = NULL;
    if (yz_nest_central(nest, 1, &v1) != YZ_STATUS_OK) return 4;
    if (yz_nest_central(nest, 2, &v2) != YZ_STATUS_OK) return 4;
    yz_nest_free(nest);
    YzEstimate e;
    if (yz_modulus(v1, v2, 128, 1e-8, &e) != YZ_STATUS_OK) return 5;
    double r = 0.0;
    YzStatus s = yz_superstable_center(99, &r, &r);
    if (s != YZ_STATUS_INVALID_ARGUMENT || yz_last_error()[0] == 0) return 6;
    printf("%s %.3f\n", yz_status_name(s), e.richardson);
    yz_piece_free(v1);
    yz_piece_free(v2);
    return 0;
}
"#;

#[test]
fn c_program_links_against_the_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<test binary>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libyoccoz_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    let exe = tmp.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c11")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("run cc");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("invalid argument "), "{text}");
}
