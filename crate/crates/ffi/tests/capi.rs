use std::ffi::{CStr, CString};
use std::ptr;

use cohspace_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    let n = unsafe { coh_last_error(buf.as_mut_ptr(), buf.len()) };
    if n == 0 {
        return String::new();
    }
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn space(desc: &str) -> *mut CohSpace {
    let d = CString::new(desc).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { coh_space_new(d.as_ptr(), &mut s) }, CohStatus::Ok, "{}", last_error());
    s
}

#[test]
fn trivial_space_eval_and_gram() {
    let s = space(r#"{"kind":"trivial","dim":2}"#);
    assert_eq!(unsafe { coh_space_label_dim(s) }, 2);
    let z = [1.0, 0.0, 0.0, 0.0];
    let z2 = [0.0, 0.0, 1.0, 0.0];
    let (mut re, mut im) = (f64::NAN, f64::NAN);
    let st = unsafe { coh_space_eval(s, z.as_ptr(), z2.as_ptr(), 2, &mut re, &mut im) };
    assert_eq!(st, CohStatus::Ok);
    assert_eq!((re, im), (0.0, 0.0));
    let pts = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
    let mut g = [f64::NAN; 8];
    assert_eq!(unsafe { coh_space_gram(s, pts.as_ptr(), 2, 2, g.as_mut_ptr()) }, CohStatus::Ok);
    assert_eq!(g, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    unsafe { coh_space_free(s) };
}

#[test]
fn spin_basis_rank() {
    let s = space(r#"{"kind":"spin","exponent":3}"#);
    let mut pts = Vec::new();
    for k in 0..6 {
        let th = 0.3 + 0.4 * k as f64;
        let ph = 0.7 * k as f64;
        let (a, b) = ((th / 2.0).cos(), (th / 2.0).sin());
        pts.extend([a, 0.0, b * ph.cos(), b * ph.sin()]);
    }
    let mut qb = ptr::null_mut();
    let st = unsafe { coh_basis_build(s, pts.as_ptr(), 6, 2, 1e-10, &mut qb) };
    assert_eq!(st, CohStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { coh_basis_rank(qb) }, 4);
    let (mut min, mut passed) = (0.0, 0);
    let st = unsafe { coh_space_check(s, pts.as_ptr(), 6, 2, 1e-8, &mut min, &mut passed) };
    assert_eq!(st, CohStatus::Ok);
    assert_eq!(passed, 1);
    unsafe {
        coh_basis_free(qb);
        coh_space_free(s);
    }
}

#[test]
fn oscillator_spectrum() {
    let m = CString::new(r#"{"model":"oscillator","hbar_omega":1.0}"#).unwrap();
    let mut sp = ptr::null_mut();
    assert_eq!(unsafe { coh_spectrum_solve(m.as_ptr(), 0.0, 10.0, 1e-10, &mut sp) }, CohStatus::Ok);
    assert_eq!(unsafe { coh_spectrum_len(sp) }, 10);
    for i in 0..10 {
        let (mut e, mut n) = (0.0, 0usize);
        assert_eq!(unsafe { coh_spectrum_level(sp, i, &mut e, &mut n) }, CohStatus::Ok);
        assert!((e - (n as f64 + 0.5)).abs() < 1e-10);
    }
    let (mut e, mut n) = (0.0, 0usize);
    assert_eq!(unsafe { coh_spectrum_level(sp, 10, &mut e, &mut n) }, CohStatus::IndexOutOfRange);
    unsafe { coh_spectrum_free(sp) };
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut s = ptr::null_mut();
    let bad = CString::new(r#"{"kind":"nope"}"#).unwrap();
    assert_eq!(unsafe { coh_space_new(bad.as_ptr(), &mut s) }, CohStatus::Config);
    assert!(s.is_null());
    assert!(last_error().contains("nope"));
    assert_eq!(unsafe { coh_space_new(ptr::null(), &mut s) }, CohStatus::NullPointer);

    let sp = space(r#"{"kind":"spin","exponent":2}"#);
    let off = [2.0, 0.0, 0.0, 0.0];
    let (mut re, mut im) = (0.0, 0.0);
    let st = unsafe { coh_space_eval(sp, off.as_ptr(), off.as_ptr(), 2, &mut re, &mut im) };
    assert_eq!(st, CohStatus::InvalidPoint);
    // a successful call clears the message
    let on = [1.0, 0.0, 0.0, 0.0];
    assert_eq!(unsafe { coh_space_eval(sp, on.as_ptr(), on.as_ptr(), 2, &mut re, &mut im) }, CohStatus::Ok);
    assert_eq!(unsafe { coh_last_error(ptr::null_mut(), 0) }, 0);
    unsafe { coh_space_free(sp) };
}

#[test]
fn run_config_returns_payload() {
    let cfg = CString::new(r#"{"command":"spec-solve","model":{"model":"oscillator"},"interval":[0,3]}"#).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { coh_run(cfg.as_ptr(), &mut out) }, CohStatus::Ok);
    let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
    unsafe { coh_string_free(out) };
    assert_eq!(text, "n,energy,residual\n0,0.5,0\n1,1.5,0\n2,2.5,0\n");

    let cfg = CString::new(r#"{"command":"kernel-check","space":{"kind":"spin","exponent":0.6},"samples":30}"#).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { coh_run(cfg.as_ptr(), &mut out) }, CohStatus::KernelNotPsd);
    assert!(!out.is_null());
    unsafe { coh_string_free(out) };
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/cohspace.h")).unwrap();
    for f in [
        "coh_last_error",
        "coh_version",
        "coh_space_new",
        "coh_space_free",
        "coh_space_label_dim",
        "coh_space_eval",
        "coh_space_gram",
        "coh_space_check",
        "coh_basis_build",
        "coh_basis_rank",
        "coh_basis_free",
        "coh_spectrum_solve",
        "coh_spectrum_len",
        "coh_spectrum_level",
        "coh_spectrum_free",
        "coh_run",
        "coh_string_free",
    ] {
        assert!(h.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(h.contains("typedef struct CohSpace CohSpace;"));
    let v = unsafe { CStr::from_ptr(coh_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let dir = tempdir();
    let src = dir.join("use_header.c");
    std::fs::write(
        &src,
        "#include \"cohspace.h\"\nint main(void) { CohSpace *s = 0; return coh_space_new(\"{}\", &s) == COH_STATUS_OK; }\n",
    )
    .unwrap();
    let status = match std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-I", concat!(env!("CARGO_MANIFEST_DIR"), "/include")])
        .arg(&src)
        .status()
    {
        Ok(s) => s,
        Err(_) => {
            eprintln!("no C compiler; skipped");
            return;
        }
    };
    assert!(status.success());
}

fn tempdir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("cohspace-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
