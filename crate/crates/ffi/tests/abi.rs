use std::ffi::{c_char, CStr, CString};
use std::f64::consts::PI;
use std::ptr;

use rollkit_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe {
        rk_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn manifold(spec: &str) -> *mut RkManifold {
    let s = CString::new(spec).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { rk_manifold_new(s.as_ptr(), &mut m) }, RkStatus::Ok, "{}", last_error());
    m
}

fn curve(spec: &str) -> *mut RkCurve {
    let s = CString::new(spec).unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { rk_curve_new(s.as_ptr(), &mut c) }, RkStatus::Ok, "{}", last_error());
    c
}

#[test]
fn geodesic_rolls_to_a_segment() {
    let s = manifold("sphere_stereo:2");
    let e = manifold("euclidean:2");
    let arc = curve("greatcircle:len=1.5707963267948966");
    unsafe {
        assert_eq!(rk_manifold_dim(s), 2);
        let mut traj = ptr::null_mut();
        assert_eq!(rk_roll(s, e, arc, ptr::null(), ptr::null(), 1e-3, &mut traj), RkStatus::Ok);
        let n = rk_trajectory_len(traj);
        let (mut t, mut p, mut q) = (0.0, [0.0; 2], [0.0; 4]);
        assert_eq!(rk_trajectory_sample(traj, n - 1, &mut t, p.as_mut_ptr(), 2, q.as_mut_ptr(), 4), RkStatus::Ok);
        assert!((p[0] - PI / 2.0).abs() < 1e-9 && p[1].abs() < 1e-9);
        assert!((q[0] - 1.0).abs() < 1e-12 && q[1].abs() < 1e-12);
        let mut rep = RkRollingReport::default();
        assert_eq!(rk_verify(s, e, traj, 4, 1e-6, &mut rep), RkStatus::Ok);
        assert!(rep.complete && rep.no_slip < 1e-6);
        rk_trajectory_free(traj);
        rk_curve_free(arc);
        rk_manifold_free(s);
        rk_manifold_free(e);
    }
}

#[test]
fn existence_verdicts_and_fitted_rotation() {
    let e = manifold("euclidean:3");
    let a = curve("exonepoint_pair:branch=0");
    let b = curve("exonepoint_pair:branch=1");
    let h = curve("helix");
    unsafe {
        let mut v = RkVerdict::default();
        let mut iota = [0.0; 9];
        assert_eq!(rk_exists_general(e, e, a, b, 1e-5, 0.0, &mut v, iota.as_mut_ptr(), 9), RkStatus::Reject);
        assert!(!v.accepted && v.residual > v.tolerance);
        assert_eq!(rk_exists_general(e, e, h, h, 1e-5, 0.0, &mut v, iota.as_mut_ptr(), 9), RkStatus::Ok);
        assert!(v.accepted);
        for (i, x) in iota.iter().enumerate() {
            let expect = if i % 4 == 0 { 1.0 } else { 0.0 };
            assert!((x - expect).abs() < 1e-9);
        }
        for c in [a, b, h] {
            rk_curve_free(c);
        }
        rk_manifold_free(e);
    }
}

#[test]
fn loop_report_for_the_unit_circle() {
    let e = manifold("euclidean:2");
    let c = curve("circle:r=1");
    let arc = curve("circle:r=1,len=4.71238898038469");
    unsafe {
        let mut rep = RkLoopReport::default();
        assert_eq!(rk_loop_check(e, c, 1e-6, 0.0, &mut rep), RkStatus::Ok);
        assert!(rep.config_loop && (rep.alpha - 2.0 * PI).abs() < 1e-8);
        assert_eq!(rk_loop_check(e, arc, 1e-6, 0.0, &mut rep), RkStatus::Reject);
        assert!((rep.closure_re.hypot(rep.closure_im) - 2f64.sqrt()).abs() < 1e-6);
        rk_curve_free(c);
        rk_curve_free(arc);
        rk_manifold_free(e);
    }
}

#[test]
fn curves_from_raw_samples() {
    let n = 201;
    let t: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let xi: Vec<f64> = t.iter().flat_map(|s| [*s, 2.0 * s]).collect();
    let e = manifold("euclidean:2");
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(rk_curve_from_samples(n, 2, t.as_ptr(), xi.as_ptr(), ptr::null(), &mut c), RkStatus::Ok);
        assert_eq!(rk_curve_len(c), n);
        let mut y = ptr::null_mut();
        assert_eq!(rk_antidevelop(e, c, 0.0, &mut y), RkStatus::Ok);
        let mut end = [0.0; 2];
        assert_eq!(rk_curve_point(y, rk_curve_len(y) - 1, end.as_mut_ptr(), 2), RkStatus::Ok);
        assert!((end[0] - 1.0).abs() < 1e-9 && (end[1] - 2.0).abs() < 1e-9);
        rk_curve_free(y);
        rk_curve_free(c);
        rk_manifold_free(e);
    }
}

#[test]
fn errors_are_reported_not_thrown() {
    unsafe {
        let mut m = ptr::null_mut();
        let bad = CString::new("klein_bottle:2").unwrap();
        assert_eq!(rk_manifold_new(bad.as_ptr(), &mut m), RkStatus::InvalidInput);
        assert!(m.is_null());
        assert!(last_error().contains("klein_bottle"));
        assert_eq!(rk_manifold_new(ptr::null(), &mut m), RkStatus::NullPointer);
        let mut rep = RkLoopReport::default();
        assert_eq!(rk_loop_check(ptr::null(), ptr::null(), 1e-6, 0.0, &mut rep), RkStatus::NullPointer);
        assert_eq!(rk_manifold_dim(ptr::null()), 0);
        let mut small = [0 as c_char; 4];
        let full = rk_last_error(small.as_mut_ptr(), small.len());
        assert!(full > 3);
        assert_eq!(small[3], 0);
        rk_manifold_free(ptr::null_mut());
    }
}

#[test]
fn chart_exit_returns_partial_trajectory() {
    let e = manifold("euclidean:2");
    let s = manifold("sphere_stereo:2");
    let line = curve("line:n=2,len=5");
    unsafe {
        let mut traj = ptr::null_mut();
        let status = rk_roll(e, s, line, ptr::null(), ptr::null(), 1e-3, &mut traj);
        assert_eq!(status, RkStatus::Numeric, "{}", last_error());
        assert!(!traj.is_null() && rk_trajectory_len(traj) > 1);
        assert!(last_error().contains("left the chart"));
        rk_trajectory_free(traj);
        rk_curve_free(line);
        rk_manifold_free(e);
        rk_manifold_free(s);
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(rk_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
