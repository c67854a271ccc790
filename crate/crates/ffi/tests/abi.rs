use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use twistkam_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(tk_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn alpha_and_map_round_trip() {
    unsafe {
        let mut a = ptr::null_mut();
        let name = CString::new("golden").unwrap();
        assert_eq!(tk_alpha_preset(name.as_ptr(), 24, &mut a), TkStatus::Ok);
        let (mut p, mut q) = (0u64, 0u64);
        assert_eq!(tk_alpha_convergent(a, 10, &mut p, &mut q), TkStatus::Ok);
        assert_eq!((p, q), (55, 89));
        let mut norm = 0.0;
        assert_eq!(tk_alpha_qalpha_norm(a, 10, &mut norm), TkStatus::Ok);
        assert!(norm > 0.0 && norm < 1.0 / 89.0);

        let mut m = ptr::null_mut();
        assert_eq!(tk_map_new(a, 10, 0.5, 1.0, &mut m), TkStatus::Ok);
        tk_alpha_free(a);
        let (mut det, mut gen) = (1.0, 1.0);
        assert_eq!(tk_map_self_check(m, 1000, 3, &mut det, &mut gen), TkStatus::Ok);
        assert!(det < 1e-12 && gen < 1e-10);

        let mut c = ptr::null_mut();
        assert_eq!(tk_minimize(m, 34, 55, 1, &mut c), TkStatus::Ok);
        let (mut res, mut act, mut period) = (1.0, 0.0, 0u64);
        assert_eq!(tk_configuration_diagnostics(c, &mut res, &mut act), TkStatus::Ok);
        assert_eq!(tk_configuration_period(c, &mut period), TkStatus::Ok);
        assert!(res <= 1e-10 && period == 55);
        let (mut x0, mut xq) = (0.0, 0.0);
        tk_configuration_x(c, 0, &mut x0);
        tk_configuration_x(c, 55, &mut xq);
        assert!((xq - x0 - 34.0).abs() < 1e-12);
        tk_configuration_free(c);
        tk_map_free(m);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut a = ptr::null_mut();
        let bad = CString::new("bronze").unwrap();
        assert_eq!(tk_alpha_preset(bad.as_ptr(), 24, &mut a), TkStatus::InvalidInput);
        assert!(a.is_null());
        assert!(last_error().contains("bronze"));

        assert_eq!(tk_alpha_preset(ptr::null(), 24, &mut a), TkStatus::NullPointer);
        let quotients = [1u64];
        assert_eq!(tk_alpha_from_quotients(quotients.as_ptr(), 1, 24, &mut a), TkStatus::Ok);
        let (mut p, mut q) = (0, 0);
        assert_eq!(tk_alpha_convergent(a, 99, &mut p, &mut q), TkStatus::InvalidInput);
        let mut m = ptr::null_mut();
        assert_eq!(tk_map_new(a, 10, 1.5, 1.0, &mut m), TkStatus::InvalidInput);
        assert_eq!(tk_map_new(a, 30, 0.5, 1.0, &mut m), TkStatus::InvalidInput);
        tk_alpha_free(a);
        tk_alpha_free(ptr::null_mut());
    }
}

#[test]
fn criteria_record_over_the_boundary() {
    let toml = r#"
        alpha = { preset = "golden" }
        depth = 24
        level = 10
        eps = 0.5
        potential = [[1, 0.025330295910584444]]
        amplitude = 0.0
        kappa_min = 6
        kappa_max = 6
        window = 16
        margin = 1.0
        budgets = { chords = 8, pairs = 4, quadruples = 2 }
        mixed_fraction = 0.25
        seeds = [1]
    "#;
    let text = CString::new(toml).unwrap();
    unsafe {
        let mut r = ptr::null_mut();
        assert_eq!(tk_run_criteria(text.as_ptr(), 2, &mut r), TkStatus::Ok, "{}", last_error());
        let mut done = 0;
        let mut v = TkVerdict::None;
        assert_eq!(tk_record_complete(r, &mut done), TkStatus::Ok);
        assert_eq!(tk_record_verdict(r, &mut v), TkStatus::Ok);
        assert_eq!((done, v), (1, TkVerdict::BoundedWithMargin));
        let mut json = ptr::null_mut();
        assert_eq!(tk_record_json(r, &mut json), TkStatus::Ok);
        let s = CStr::from_ptr(json).to_str().unwrap();
        assert!(s.starts_with("{\"schema\":\"1\""));
        tk_string_free(json);
        tk_record_free(r);

        let junk = CString::new("nonsense = 1").unwrap();
        assert_eq!(tk_run_criteria(junk.as_ptr(), 1, &mut r), TkStatus::Io);
        assert!(r.is_null());
    }
}

fn target_dir() -> PathBuf {
    // CARGO_TARGET_TMPDIR is <target>/tmp; the library sits in <target>/<profile>
    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(|d| d.parent()).map(PathBuf::from).unwrap_or_else(|| tmp.join(".."))
}

#[test]
fn c_program_compiles_and_links() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let libdir = target_dir();
    if !libdir.join("libtwistkam_ffi.so").exists() {
        eprintln!("shared library not built in {}; skipping", libdir.display());
        return;
    }
    let src = r#"
        #include <stdio.h>
        #include "twistkam.h"
        int main(void) {
            TkAlpha *a = NULL;
            TkMap *m = NULL;
            uint64_t p = 0, q = 0;
            double x = 0.1, y = 0.6, xp, yp;
            if (tk_alpha_preset("golden", 24, &a) != TK_STATUS_OK) return 1;
            if (tk_alpha_convergent(a, 10, &p, &q) != TK_STATUS_OK || q != 89) return 2;
            if (tk_map_new(a, 10, 0.5, 1.0, &m) != TK_STATUS_OK) return 3;
            if (tk_map_step(m, x, y, &xp, &yp) != TK_STATUS_OK) return 4;
            if (tk_alpha_preset("nope", 24, &a) != TK_STATUS_INVALID_INPUT) return 5;
            printf("%s %.17g %.17g\n", tk_version(), xp, yp);
            tk_map_free(m);
            return 0;
        }
    "#;
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("probe.c");
    let bin = dir.path().join("probe");
    std::fs::write(&c, src).unwrap();
    let status = Command::new(&cc)
        .arg(&c)
        .arg("-I")
        .arg(root.join("include"))
        .arg("-L")
        .arg(&libdir)
        .arg(format!("-Wl,-rpath,{}", libdir.display()))
        .arg("-ltwistkam_ffi")
        .arg("-o")
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut it = text.split_whitespace();
    assert_eq!(it.next(), Some(env!("CARGO_PKG_VERSION")));

    // the C result matches the Rust map bit for bit
    let alpha = twistkam::number_theory::ConstantTypeIrrational::golden(24).unwrap();
    let map = twistkam::twist_map::TwistMap::new(alpha, 10, 0.5, twistkam::twist_map::Potential::standard()).unwrap();
    let (xp, yp) = map.step(0.1, 0.6);
    assert_eq!(it.next().unwrap().parse::<f64>().unwrap(), xp);
    assert_eq!(it.next().unwrap().parse::<f64>().unwrap(), yp);
}
