//! End-to-end scenarios: loop batteries, junctions, SU(2) syntheses and composition.

mod common;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rollkit::curve::{builtin_curve, exonepoint_pair, SampledCurve};
use rollkit::existence::{
    junction_compatibility, loop_check, minimal_parallel_rank, JUNCTION_MAX_GAP, TOL_LOOP,
};
use rollkit::frenet::EPS_REG;
use rollkit::geometry::{Euclidean, HyperbolicHalfPlane, Manifold, Params, SphereStereo};
use rollkit::integrate::IntegratorOptions;
use rollkit::rolling::{compose_rollings, roll_along, verify_rolling};
use rollkit::synthesis::{backend_su2, CurvatureProfile};
use rollkit::Error;

use common::{random_rotation, rigid_copy, rng, sup, v};

fn opts() -> IntegratorOptions {
    IntegratorOptions::step(1e-3)
}

fn curve(family: &str, kv: &[(&str, f64)]) -> SampledCurve {
    let p: Params = kv.iter().map(|(k, x)| (k.to_string(), *x)).collect();
    builtin_curve(family, &p).unwrap()
}

/// `loop_check` agrees with rolling the surface on the plane directly:
/// the contact point and the isometry both return to their start.
#[test]
fn loop_check_matches_direct_rolling() {
    let plane = Euclidean { n: 2 };
    let sphere = SphereStereo::new(2);
    let battery: Vec<(&dyn Manifold, SampledCurve, bool)> = vec![
        (&plane, curve("circle", &[("r", 1.0)]), true),
        (&plane, curve("circle", &[("r", 2.0), ("cx", 1.0)]), true),
        (&plane, curve("circle", &[("r", 0.5), ("len", 2.0 * PI)]), true),
        (&plane, curve("ellipse", &[("a", 2.0), ("b", 1.0), ("points", 4001.0)]), true),
        (&plane, curve("ellipse", &[("a", 1.5), ("b", 0.7), ("points", 4001.0)]), true),
        (&plane, curve("circle", &[("r", 1.0), ("len", 1.5 * PI)]), false),
        (&sphere, curve("latitude", &[("colat", PI / 3.0)]), false),
        (&sphere, curve("latitude", &[("colat", 1.1)]), false),
        (&sphere, curve("latitude", &[("colat", 0.5), ("turns", 2.0)]), false),
        (&sphere, curve("latitude", &[("colat", PI / 2.0)]), false),
    ];
    for (k, (m, x, expect)) in battery.iter().enumerate() {
        let report = loop_check(*m, x, TOL_LOOP, &opts()).unwrap();
        let q0 = DMatrix::identity(2, 2);
        let tr = roll_along(*m, &plane, x, &q0, &DVector::zeros(2), &opts()).unwrap();
        let returns = (tr.xi_hat.last().unwrap() - &tr.xi_hat[0]).norm() < 1e-6 && (tr.q.last().unwrap() - &q0).amax() < 1e-6;
        assert_eq!(report.config_loop, *expect, "case {k}: {report:?}");
        assert_eq!(returns, *expect, "case {k}: direct rolling");
    }
}

#[test]
fn loop_check_refuses_non_c2_curves() {
    let stadium = curve("stadium", &[("r", 1.0), ("l", 2.0), ("points", 4001.0)]);
    assert!(matches!(loop_check(&Euclidean { n: 2 }, &stadium, TOL_LOOP, &opts()), Err(Error::NotC2 { .. })));
}

/// The one-point pair agrees on each side of `t = 0` but the Frenet frames
/// of the second curve turn by a right angle there.
#[test]
fn exonepoint_junction_defect() {
    let e = Euclidean { n: 3 };
    let (x, xh) = exonepoint_pair(4001).unwrap();
    let rep = junction_compatibility(&e, &e, &x, &xh, 0.0, JUNCTION_MAX_GAP).unwrap();
    let expect = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, -1.0, 1.0]);
    assert!((&rep.g - &expect).amax() < 1e-3, "{}", rep.g);
    assert!((rep.norm - 1.0).abs() < 1e-3);
    // the same curve on both sides has no defect
    let same = junction_compatibility(&e, &e, &x, &x, 0.0, JUNCTION_MAX_GAP).unwrap();
    assert!(same.norm < 1e-9);
}

#[test]
fn smooth_junction_is_compatible() {
    let e = Euclidean { n: 3 };
    let helix = curve("helix", &[("len", 4.0), ("points", 4001.0)]);
    let copy = rigid_copy(&helix, &random_rotation(&mut rng(8), 3), &v(&[1.0, -1.0, 0.5]));
    let rep = junction_compatibility(&e, &e, &helix, &copy, 2.0, JUNCTION_MAX_GAP).unwrap();
    assert!(rep.norm < 1e-6, "{}", rep.g);
}

#[test]
fn junction_without_nearby_frames_is_reported() {
    let e = Euclidean { n: 3 };
    let line = curve("line", &[("len", 2.0)]);
    let err = junction_compatibility(&e, &e, &line, &line, 1.0, JUNCTION_MAX_GAP).unwrap_err();
    assert!(matches!(err, Error::NotExtendable { .. }));
}

/// With `κ₂ = 1` the third Frenet field is left-invariant: the reduced frame
/// equation leaves the third column of `a` constant.
#[test]
fn su2_unit_torsion_freezes_third_field() {
    let profile = CurvatureProfile::constant(&[0.7, 1.0], 4.0).unwrap();
    let a0 = random_rotation(&mut rng(21), 3);
    let g0 = v(&[1.0, 0.0, 0.0, 0.0]);
    let syn = backend_su2(&profile, &g0, &a0, &opts()).unwrap();
    let drift = sup(syn.a.iter().map(|a| (a.column(2) - a0.column(2)).norm()));
    assert!(drift < 1e-12, "{drift:e}");
    // a constant left-invariant field is not parallel, so the curve still spans all directions
    let rank = minimal_parallel_rank(&rollkit::geometry::Su2, &syn.to_curve().unwrap(), EPS_REG, &opts()).unwrap();
    assert_eq!(rank.rank, 3);
}

#[test]
fn su2_zero_torsion_has_rank_two() {
    let profile = CurvatureProfile::constant(&[0.7, 0.0], 4.0).unwrap();
    let syn = backend_su2(&profile, &v(&[1.0, 0.0, 0.0, 0.0]), &DMatrix::identity(3, 3), &opts()).unwrap();
    let rank = minimal_parallel_rank(&rollkit::geometry::Su2, &syn.to_curve().unwrap(), EPS_REG, &opts()).unwrap();
    assert_eq!(rank.rank, 2, "{:?}", rank.singular_values);
}

/// Rolling S² on ℝ² and then ℝ² on H² along the contact curve equals
/// rolling S² on H² directly.
#[test]
fn composition_matches_direct_rolling() {
    let s = SphereStereo::new(2);
    let e = Euclidean { n: 2 };
    let h = HyperbolicHalfPlane::default();
    let mut r = rng(31);
    let x = common::Wiggle::random(&mut r, v(&[0.1, 0.2]), 0.5).curve(1.0, 1001);
    let (q1, q2) = (random_rotation(&mut r, 2), random_rotation(&mut r, 2));
    let first = roll_along(&s, &e, &x, &q1, &DVector::zeros(2), &opts()).unwrap();
    let second = roll_along(&e, &h, &first.hat_curve().unwrap(), &q2, &v(&[0.0, 1.0]), &opts()).unwrap();
    let composed = compose_rollings(&first, &second, 1e-9).unwrap();
    let direct = roll_along(&s, &h, &x, &(&q2 * &q1), &v(&[0.0, 1.0]), &opts()).unwrap();
    let dx = sup(composed.xi_hat.iter().zip(&direct.xi_hat).map(|(a, b)| (a - b).norm()));
    let dq = sup(composed.q.iter().zip(&direct.q).map(|(a, b)| (a - b).amax()));
    assert!(dx < 1e-8 && dq < 1e-8, "{dx:e} {dq:e}");
    assert!(verify_rolling(&s, &h, &composed, 4).unwrap().passes(1e-6));
}

#[test]
fn composition_rejects_mismatched_contact_curves() {
    let s = SphereStereo::new(2);
    let e = Euclidean { n: 2 };
    let x = curve("latitude", &[("colat", 1.0)]);
    let first = roll_along(&s, &e, &x, &DMatrix::identity(2, 2), &DVector::zeros(2), &opts()).unwrap();
    let other = roll_along(&s, &e, &x, &DMatrix::identity(2, 2), &v(&[0.5, 0.0]), &opts()).unwrap();
    assert!(matches!(compose_rollings(&first, &other, 1e-9), Err(Error::Mismatch(_))));
}
