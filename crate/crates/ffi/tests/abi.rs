use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use cantor_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(cantor_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn record_accessors() {
    let mut rec = ptr::null_mut();
    unsafe {
        assert_eq!(cantor_enumerate(13, CantorMethod::Words, &mut rec), CantorStatus::Ok);
        assert_eq!(cantor_record_q(rec), 13);
        assert_eq!(cantor_record_phi(rec), 12);
        assert_eq!(cantor_record_n_q(rec), 6);
        let mut len = 0;
        let p = cantor_record_numerators(rec, &mut len);
        assert_eq!(std::slice::from_raw_parts(p, len), [1, 3, 4, 9, 10, 12]);
        cantor_record_free(rec);

        assert_eq!(cantor_enumerate(9, CantorMethod::Auto, &mut rec), CantorStatus::Ok);
        assert!(!cantor_record_mlo(rec, ptr::null_mut()));
        cantor_record_free(rec);
        cantor_record_free(ptr::null_mut());
    }
}

#[test]
fn errors_carry_status_and_message() {
    let mut out = 0u64;
    unsafe {
        assert_eq!(cantor_ell(0, &mut out), CantorStatus::Domain);
        assert!(!last_error().is_empty());
        assert_eq!(cantor_mlo(9, &mut out), CantorStatus::Domain);
        assert!(last_error().contains("divisible by 3"));
        assert_eq!(cantor_ell(7, ptr::null_mut()), CantorStatus::InvalidArgument);
        assert_eq!(cantor_ell(7, &mut out), CantorStatus::Ok);
        assert_eq!(out, 6);
        assert_eq!(cantor_mlo(1001523179, &mut out), CantorStatus::Ok);
        assert_eq!(out, 178481);
        let mut rec = ptr::null_mut();
        assert_eq!(cantor_enumerate_with_budget(10_007, CantorMethod::Words, 4, 4, &mut rec), CantorStatus::Budget);
        assert!(rec.is_null());
        assert_eq!(cantor_store_open(ptr::null(), &mut ptr::null_mut()), CantorStatus::InvalidArgument);
    }
}

#[test]
fn store_counts_and_integrity() {
    let dir = tempfile::tempdir().unwrap();
    let root = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut store = ptr::null_mut();
    unsafe {
        assert_eq!(cantor_store_open(root.as_ptr(), &mut store), CantorStatus::Ok);
        let mut n = 0;
        assert_eq!(cantor_store_scan(store, 2, 40, &mut n), CantorStatus::Ok);
        assert_eq!(n, 39);
        let mut counts = CantorCounts::default();
        assert_eq!(cantor_store_counts(store, 1, 0.5, false, &mut counts), CantorStatus::Ok);
        assert_eq!(counts, CantorCounts::default());
        assert_eq!(cantor_store_counts(store, 10, 0.5, true, &mut counts), CantorStatus::Ok);
        // q = 1, 3, 4, 9, 10
        assert_eq!(counts.n_star, 2 + 2 + 2 + 4 + 4);
        std::fs::write(dir.path().join("b3-F0_2/records-50-60.jsonl"), "{\"schema\":\"x\"}\n").unwrap();
        assert_eq!(cantor_store_counts(store, 10, 0.5, true, &mut counts), CantorStatus::Integrity);
        cantor_store_free(store);
    }
}

#[test]
fn simulation_is_seeded() {
    let mut a = vec![0u64; 300];
    let mut b = vec![0u64; 300];
    unsafe {
        assert_eq!(cantor_simulate(CantorModel::DoubleStar, 13, 300, 4, a.as_mut_ptr()), CantorStatus::Ok);
        assert_eq!(cantor_simulate(CantorModel::DoubleStar, 13, 300, 4, b.as_mut_ptr()), CantorStatus::Ok);
        assert_eq!(cantor_simulate(CantorModel::Star, 13, 0, 4, b.as_mut_ptr()), CantorStatus::Domain);
    }
    assert_eq!(a, b);
    assert!(a.iter().all(|v| v % 3 == 0));
}

/// Compile the C smoke test against the generated header and static library.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().and_then(|d| d.parent()).unwrap().join("libcantor_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or {} missing", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).arg(dir.path().join("data")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.ends_with(&format!("ok {}\n", env!("CARGO_PKG_VERSION"))), "{text}");
}
