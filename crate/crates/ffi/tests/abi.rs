use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use intersectional_irs_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = irs_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn words_round_trip() {
    unsafe {
        let mut w = ptr::null_mut();
        assert_eq!(irs_word_parse(c("abAB").as_ptr(), &mut w), IrsStatus::Ok);
        let mut wi = ptr::null_mut();
        assert_eq!(irs_word_inv(w, &mut wi), IrsStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(irs_word_to_string(wi, &mut s), IrsStatus::Ok);
        assert_eq!(CStr::from_ptr(s).to_str().unwrap(), "baBA");
        irs_string_free(s);
        let mut e = ptr::null_mut();
        assert_eq!(irs_word_mul(w, wi, &mut e), IrsStatus::Ok);
        assert_eq!(irs_word_len(e), 0);
        for h in [w, wi, e] {
            irs_word_free(h);
        }
    }
}

#[test]
fn errors_are_reported_by_code_and_message() {
    unsafe {
        let mut w = ptr::null_mut();
        assert_eq!(irs_word_parse(c("ab7").as_ptr(), &mut w), IrsStatus::Parse);
        assert!(w.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(
            irs_word_parse(ptr::null(), &mut w),
            IrsStatus::NullOrEncoding
        );
        let mut x = 0.0;
        assert_eq!(
            irs_membership_probability(1.5, 1, &mut x),
            IrsStatus::Invalid
        );
        let mut d = IrsGlueDepth::default();
        assert_eq!(
            irs_choose_glue_depth(1, 0.5, 1, 0.0, 0.5, 0.5, &mut d),
            IrsStatus::Invalid
        );
    }
}

#[test]
fn closed_forms() {
    unsafe {
        let mut x = 0.0;
        assert_eq!(irs_fano_bound(0.5, 1, &mut x), IrsStatus::Ok);
        assert!((x - 4.0 * 2f64.ln()).abs() < 1e-12);
        assert_eq!(irs_membership_probability(0.5, 2, &mut x), IrsStatus::Ok);
        assert_eq!(x, 0.25);
        assert_eq!(irs_membership_probability(0.3, -1, &mut x), IrsStatus::Ok);
        assert_eq!(x, 0.0);
        let mut d = IrsGlueDepth::default();
        assert_eq!(
            irs_choose_glue_depth(2, 0.1, 1, 0.5, 1.0, 1.0, &mut d),
            IrsStatus::Ok
        );
        assert_eq!((d.ell, d.n), (4, 9));
    }
}

#[test]
fn glued_graph_queries() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(
            irs_glued_new(c("heisenberg").as_ptr(), b'a' as _, 2, &mut g),
            IrsStatus::Ok
        );
        let mut ok = false;
        assert_eq!(irs_glued_is_tree_like(g, 2, &mut ok), IrsStatus::Ok);
        assert!(ok);
        assert_eq!(irs_glued_is_tree_like(g, 3, &mut ok), IrsStatus::Ok);
        assert!(!ok);

        let mut w = ptr::null_mut();
        // [[a, b], a] lies in the kernel of the Heisenberg quotient
        assert_eq!(
            irs_word_parse(c("abABabaBAA").as_ptr(), &mut w),
            IrsStatus::Ok
        );
        let mut norm = -2;
        assert_eq!(irs_glued_norm(g, w, &mut norm), IrsStatus::Ok);
        assert!(norm >= 0);
        irs_word_free(w);

        let mut m = ptr::null_mut();
        assert_eq!(irs_measure_srw(2, &mut m), IrsStatus::Ok);
        let mut h = [0.0; 3];
        assert_eq!(
            irs_rw_entropy(m, ptr::null(), 3, h.as_mut_ptr()),
            IrsStatus::Ok
        );
        assert!((h[0] - 4f64.ln()).abs() < 1e-12);
        let mut e = IrsEntropyEstimate::default();
        assert_eq!(
            irs_glued_bundle_entropy(g, m, 0.5, 1, 0, 1, &mut e),
            IrsStatus::Ok
        );
        assert!((e.value - 4f64.ln()).abs() < 1e-12);
        let mut f = IrsFixingReport::default();
        assert_eq!(irs_glued_fixing(g, m, 1, 50, 500, 3, &mut f), IrsStatus::Ok);
        assert!(f.alpha_lower <= f.alpha_upper);
        irs_measure_free(m);
        irs_glued_free(g);
    }
}

#[test]
fn run_config_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 3\nt_max = 3\nconstruction = \"quotient { name = heisenberg }\"\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let st = unsafe {
        irs_run_config(
            c("rw-entropy").as_ptr(),
            c(cfg.to_str().unwrap()).as_ptr(),
            c(out.to_str().unwrap()).as_ptr(),
            2,
        )
    };
    assert_eq!(st, IrsStatus::Ok);
    let csv = std::fs::read_to_string(out.join("rw-entropy.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(out.join("rw-entropy.meta.json").exists());
    let st = unsafe { irs_run_config(c("bogus").as_ptr(), c("x").as_ptr(), c("y").as_ptr(), 1) };
    assert_eq!(st, IrsStatus::Parse);
}

#[test]
fn header_compiles_and_links_from_c() {
    let here = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = here.join("include/intersectional_irs.h");
    let text = std::fs::read_to_string(&header).expect("header generated by build.rs");
    for sym in [
        "irs_word_parse",
        "irs_glued_norm",
        "irs_run_config",
        "IRS_STATUS_BUDGET",
        "typedef struct IrsGlued IrsGlued",
    ] {
        assert!(text.contains(sym), "header lacks {sym}");
    }
    // the test binary lives in <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libintersectional_irs_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let bin = tmp.path().join("smoke");
    let status = Command::new("cc")
        .arg(here.join("tests/smoke.c"))
        .arg("-I")
        .arg(here.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("a C compiler");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(
        out.status.success(),
        "C smoke test exited with {:?}",
        out.status
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
