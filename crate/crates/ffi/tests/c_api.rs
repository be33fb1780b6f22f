use std::ffi::CStr;
use std::ptr;

use overlapq_ffi::*;

fn params(lambda: f64, mu: f64) -> *mut OverlapqParams {
    let mut p = ptr::null_mut();
    let st = unsafe { overlapq_params_new(lambda, mu, &mut p) };
    assert_eq!(st, OverlapqStatus::Ok);
    assert!(!p.is_null());
    p
}

fn last_error() -> String {
    let m = overlapq_last_error_message();
    assert!(!m.is_null());
    unsafe { CStr::from_ptr(m) }.to_string_lossy().into_owned()
}

#[test]
fn closed_forms_through_handle() {
    let p = params(0.5, 1.0);
    let mut v = 0.0;
    unsafe {
        assert_eq!(overlapq_max_tail(p, 1.0, &mut v), OverlapqStatus::Ok);
        assert!((v - (2.0 / 3.0) * (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(overlapq_min_tail(p, 1.0, &mut v), OverlapqStatus::Ok);
        assert!((v - (1.0 / 3.0) * (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(overlapq_wait_tail(p, 0.0, &mut v), OverlapqStatus::Ok);
        assert!((v - 0.5).abs() < 1e-15);
        assert_eq!(overlapq_max_moment(p, 1, &mut v), OverlapqStatus::Ok);
        assert!((v - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(overlapq_max_variance(p, &mut v), OverlapqStatus::Ok);
        assert!((v - 32.0 / 9.0).abs() < 1e-12);
        assert_eq!(overlapq_max_atom_zero(p, &mut v), OverlapqStatus::Ok);
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(overlapq_min_atom_zero(p, &mut v), OverlapqStatus::Ok);
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(overlapq_max_transform(p, 0.0, &mut v), OverlapqStatus::Ok);
        assert!((v - 1.0).abs() < 1e-15);
        assert_eq!(overlapq_min_transform(p, 0.0, &mut v), OverlapqStatus::Ok);
        assert!((v - 1.0).abs() < 1e-15);
        assert_eq!(overlapq_min_variance(p, &mut v), OverlapqStatus::Ok);
        assert!(v > 0.0);
        assert_eq!(overlapq_min_moment(p, 2, &mut v), OverlapqStatus::Ok);
        assert!(v > 0.0);
        assert_eq!(overlapq_diff_density(p, 0.0, &mut v), OverlapqStatus::Ok);
        assert!(v > 0.0);
        overlapq_params_free(p);
    }
}

#[test]
fn error_codes_and_messages() {
    let mut p = ptr::null_mut();
    let st = unsafe { overlapq_params_new(1.0, 1.0, &mut p) };
    assert_eq!(st, OverlapqStatus::InvalidArgument);
    assert!(p.is_null());
    assert!(last_error().contains("unstable"));

    let mut v = 0.0;
    let st = unsafe { overlapq_max_tail(ptr::null(), 1.0, &mut v) };
    assert_eq!(st, OverlapqStatus::NullPointer);
    assert!(last_error().contains("params"));

    let q = params(0.5, 1.0);
    unsafe {
        assert_eq!(overlapq_max_tail(q, 1.0, ptr::null_mut()), OverlapqStatus::NullPointer);
        assert_eq!(overlapq_max_moment(q, 0, &mut v), OverlapqStatus::InvalidArgument);
        assert_eq!(overlapq_max_tail(q, 1.0, &mut v), OverlapqStatus::Ok);
        assert!(overlapq_last_error_message().is_null());
        overlapq_params_free(q);
        overlapq_params_free(ptr::null_mut());
    }
}

#[test]
fn trajectory_round_trip() {
    let a = c"exp:0.8";
    let s = c"exp:1";
    let mut t = ptr::null_mut();
    let st = unsafe { overlapq_simulate(a.as_ptr(), s.as_ptr(), 1000, 7, 0, &mut t) };
    assert_eq!(st, OverlapqStatus::Ok);
    assert_eq!(unsafe { overlapq_trajectory_len(t) }, 1000);

    let mut waits = vec![0.0; 1000];
    let mut adj = vec![0.0; 1000];
    let mut max = vec![0.0; 1000];
    let mut written = 0usize;
    unsafe {
        assert_eq!(
            overlapq_trajectory_copy(t, OverlapqField::Wait, waits.as_mut_ptr(), waits.len(), &mut written),
            OverlapqStatus::Ok
        );
        assert_eq!(written, 1000);
        assert_eq!(
            overlapq_trajectory_copy(t, OverlapqField::AdjacentOverlap, adj.as_mut_ptr(), adj.len(), &mut written),
            OverlapqStatus::Ok
        );
        assert_eq!(written, 999);
        for k in 0..999 {
            assert!((adj[k] - waits[k + 1]).abs() < 1e-9);
        }
        assert_eq!(
            overlapq_trajectory_copy(t, OverlapqField::MaxOverlap, max.as_mut_ptr(), max.len(), &mut written),
            OverlapqStatus::Ok
        );
        assert_eq!(written, 998);

        let mut small = [0.0; 10];
        let st = overlapq_trajectory_copy(t, OverlapqField::Service, small.as_mut_ptr(), small.len(), &mut written);
        assert_eq!(st, OverlapqStatus::InvalidArgument);
        assert_eq!(written, 1000);

        let mut t2 = ptr::null_mut();
        assert_eq!(overlapq_simulate(a.as_ptr(), s.as_ptr(), 1000, 7, 0, &mut t2), OverlapqStatus::Ok);
        let mut waits2 = vec![0.0; 1000];
        overlapq_trajectory_copy(t2, OverlapqField::Wait, waits2.as_mut_ptr(), 1000, &mut written);
        assert_eq!(waits, waits2);

        overlapq_trajectory_free(t);
        overlapq_trajectory_free(t2);
        assert_eq!(overlapq_trajectory_len(ptr::null()), 0);
    }
}

#[test]
fn bad_distribution_string() {
    let mut t = ptr::null_mut();
    let st = unsafe { overlapq_simulate(c"gamma:2".as_ptr(), c"exp:1".as_ptr(), 100, 1, 0, &mut t) };
    assert_eq!(st, OverlapqStatus::InvalidArgument);
    assert!(t.is_null());
    assert!(!last_error().is_empty());
    let st = unsafe { overlapq_simulate(ptr::null(), c"exp:1".as_ptr(), 100, 1, 0, &mut t) };
    assert_eq!(st, OverlapqStatus::NullPointer);
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(overlapq_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/overlapq.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let mut n = 0;
    for line in src.lines() {
        if let Some(rest) = line.split("extern \"C\" fn ").nth(1) {
            let name = rest.split('(').next().unwrap();
            assert!(header.contains(&format!("{name}(")), "{name} missing from header");
            n += 1;
        }
    }
    assert!(n >= 20);
    assert!(header.contains("OVERLAPQ_H"));
    assert!(header.contains("OVERLAPQ_STATUS_INVALID_ARGUMENT"));
}
