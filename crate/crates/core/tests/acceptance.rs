//! Acceptance gate: ten end-to-end criteria, one PASS/FAIL line each.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rollkit::curve::{builtin_curve, exonepoint_pair, SampledCurve};
use rollkit::existence::{
    exists_by_curvature, exists_general, extract_euclidean_isometry, latitude_holonomy, loop_check, loop_in_q,
    minimal_parallel_rank, TOL_CURV, TOL_GEN, TOL_LOOP,
};
use rollkit::frenet::{frenet_apparatus, EPS_REG};
use rollkit::geometry::{Euclidean, HyperbolicHalfPlane, Manifold, Params, SphereStereo, Su2};
use rollkit::integrate::IntegratorOptions;
use rollkit::linalg::{orthogonality_defect, wrap_angle};
use rollkit::rolling::{roll_along, verify_rolling, RollingTrajectory};
use rollkit::synthesis::{backend_euclidean, backend_sphere, backend_su2, synthesize_rolling, CurvatureProfile, Synthesis};
use rollkit::transport::{antidevelop, develop};

use common::{random_rotation, rigid_copy, rng, sup, v, Wiggle};

type Check = Result<String, String>;
type RollCase<'a> = (&'a dyn Manifold, &'a dyn Manifold, SampledCurve, DVector<f64>);
type Criterion = fn() -> Check;

const H: f64 = 1e-3;

fn opts() -> IntegratorOptions {
    IntegratorOptions::step(H)
}

fn params(kv: &[(&str, f64)]) -> Params {
    kv.iter().map(|(k, x)| (k.to_string(), *x)).collect()
}

fn curve(family: &str, kv: &[(&str, f64)]) -> SampledCurve {
    builtin_curve(family, &params(kv)).expect("builtin curve")
}

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn identity(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n)
}

/// Largest deviation of the measured curvatures of a unit-speed curve from `expect`
/// (two samples at each end skipped).
fn curvature_error(m: &dyn Manifold, c: &SampledCurve, expect: impl Fn(f64) -> DVector<f64>) -> Result<f64, String> {
    let f = frenet_apparatus(m, c, EPS_REG).map_err(err)?;
    Ok(sup((2..c.len() - 2).map(|i| (&f.kappa[i] - expect(c.t[i])).amax())))
}

fn hat_curve(t: &RollingTrajectory) -> Result<SampledCurve, String> {
    t.hat_curve().map_err(err)
}

fn syn_curve(s: &Synthesis) -> Result<SampledCurve, String> {
    s.to_curve().map_err(err)
}

// 1. A great-circle arc rolls out to a straight segment.
fn geodesic_to_line() -> Check {
    let s = SphereStereo::new(2);
    let e = Euclidean { n: 2 };
    let arc = curve("greatcircle", &[("len", PI / 2.0)]);
    let tr = roll_along(&s, &e, &arc, &identity(2), &DVector::zeros(2), &opts()).map_err(err)?;
    let deviation = sup(tr.t.iter().zip(&tr.xi_hat).map(|(t, x)| (x - v(&[*t, 0.0])).norm()));
    let length = (tr.xi_hat.last().unwrap() - &tr.xi_hat[0]).norm();
    let drift = sup(tr.q.iter().map(orthogonality_defect));
    ensure(
        deviation < 1e-6 && drift < 1e-8 && (length - PI / 2.0).abs() < 1e-6 && tr.exit.is_none(),
        format!("deviation {deviation:.2e}, segment length {length:.12}, drift {drift:.2e}"),
    )
}

/// A random smooth curve on `m` and a starting point on `mh`.
fn random_case(kind: usize, seed: u64) -> (Box<dyn Manifold>, Box<dyn Manifold>, SampledCurve, DVector<f64>) {
    let mut r = rng(seed);
    let plane = || Box::new(Euclidean { n: 2 }) as Box<dyn Manifold>;
    let sphere = || Box::new(SphereStereo::new(2)) as Box<dyn Manifold>;
    let hyper = || Box::new(HyperbolicHalfPlane::default()) as Box<dyn Manifold>;
    let r3 = || Box::new(Euclidean { n: 3 }) as Box<dyn Manifold>;
    let su2 = || Box::new(Su2) as Box<dyn Manifold>;
    let chart = |r: &mut rand_chacha::ChaCha8Rng, base: DVector<f64>| Wiggle::random(r, base, 0.5).curve(1.0, 1001);
    let quat = |r: &mut rand_chacha::ChaCha8Rng| Wiggle::random(r, v(&[1.0, 0.0, 0.0, 0.0]), 0.5).quaternion_curve(1.0, 1001);
    match kind % 6 {
        0 => (sphere(), plane(), chart(&mut r, v(&[0.1, -0.1])), DVector::zeros(2)),
        1 => (plane(), sphere(), chart(&mut r, v(&[0.0, 0.0])), v(&[0.1, 0.2])),
        2 => (sphere(), hyper(), chart(&mut r, v(&[-0.1, 0.2])), v(&[0.0, 1.0])),
        3 => (hyper(), sphere(), chart(&mut r, v(&[0.3, 1.2])), v(&[0.0, 0.0])),
        4 => (su2(), r3(), quat(&mut r), DVector::zeros(3)),
        _ => (r3(), su2(), chart(&mut r, v(&[0.0, 0.0, 0.0])), v(&[0.5, 0.5, 0.5, 0.5])),
    }
}

// 2. Random smooth curves satisfy the rolling axioms, with fourth-order convergence.
fn axiom_residuals() -> Check {
    let mut worst = 0.0f64;
    for i in 0..20 {
        let (m, mh, x, xh0) = random_case(i, 100 + i as u64);
        let q0 = random_rotation(&mut rng(500 + i as u64), m.dim());
        let tr = roll_along(m.as_ref(), mh.as_ref(), &x, &q0, &xh0, &opts()).map_err(err)?;
        if tr.exit.is_some() {
            return Err(format!("case {i} left the chart"));
        }
        let rep = verify_rolling(m.as_ref(), mh.as_ref(), &tr, 4).map_err(err)?;
        worst = worst.max(rep.max_residual());
    }
    let mut ratios = Vec::new();
    for kind in 0..6 {
        let (m, mh, x, xh0) = random_case(kind, 900 + kind as u64);
        let q0 = identity(m.dim());
        let coarse = |h: f64| -> Result<f64, String> {
            let tr = roll_along(m.as_ref(), mh.as_ref(), &x, &q0, &xh0, &IntegratorOptions::step(h)).map_err(err)?;
            Ok(verify_rolling(m.as_ref(), mh.as_ref(), &tr, 4).map_err(err)?.max_residual())
        };
        ratios.push(coarse(0.0125)? / coarse(0.00625)?);
    }
    let fourth_order = ratios.iter().all(|r| (13.0..=19.0).contains(r));
    ensure(
        worst < 1e-6 && fourth_order,
        format!("20 curves, max residual {worst:.2e}; halving h divides residuals by {ratios:.1?}"),
    )
}

// 3. Rolling ℝ³ onto S³ preserves both curvatures of a helix.
fn curvature_preservation() -> Check {
    let e = Euclidean { n: 3 };
    let helix = curve("helix", &[("kappa", 1.0), ("tau", 0.5), ("len", 3.0), ("points", 3001.0)]);
    let expect = |_| v(&[1.0, 0.5]);
    let s3 = SphereStereo::new(3);
    let to_sphere = roll_along(&e, &s3, &helix, &identity(3), &DVector::zeros(3), &opts()).map_err(err)?;
    let sphere_err = curvature_error(&s3, &hat_curve(&to_sphere)?, expect)?;
    let g0 = v(&[1.0, 0.0, 0.0, 0.0]);
    let to_su2 = roll_along(&e, &Su2, &helix, &identity(3), &g0, &opts()).map_err(err)?;
    let su2_err = curvature_error(&Su2, &hat_curve(&to_su2)?, expect)?;
    let profile = CurvatureProfile::constant(&[1.0, 0.5], 3.0).map_err(err)?;
    let bs = backend_sphere(&profile, &DVector::zeros(3), &identity(3), &opts()).map_err(err)?;
    let bs_err = curvature_error(&s3, &syn_curve(&bs)?, expect)?;
    let bq = backend_su2(&profile, &g0, &identity(3), &opts()).map_err(err)?;
    let bq_err = curvature_error(&Su2, &syn_curve(&bq)?, expect)?;
    let worst = sphere_err.max(su2_err).max(bs_err).max(bq_err);
    ensure(
        worst < 1e-4,
        format!(
            "max |κ̂ − κ|: rolled onto stereographic S³ {sphere_err:.1e}, onto SU(2) {su2_err:.1e}, sphere backend {bs_err:.1e}, SU(2) backend {bq_err:.1e}"
        ),
    )
}

// 4. Two-dimensional existence by geodesic curvature.
fn existence_2d() -> Check {
    let s = SphereStereo::new(2);
    let e = Euclidean { n: 2 };
    let lat = curve("latitude", &[("colat", PI / 3.0), ("points", 2001.0)]);
    let wide = curve("circle", &[("r", 3f64.sqrt()), ("points", 2001.0)]);
    let unit = curve("circle", &[("r", 1.0), ("points", 2001.0)]);
    let yes = exists_by_curvature(&s, &e, &lat, &wide, TOL_CURV).map_err(err)?;
    let no = exists_by_curvature(&s, &e, &lat, &unit, TOL_CURV).map_err(err)?;
    let oracle = 1.0 - 1.0 / 3f64.sqrt();
    let gap_err = (no.residual - oracle).abs();
    ensure(
        yes.accepted && !no.accepted && gap_err < 1e-6,
        format!(
            "radius √3 accepted={} (|Δk_g| {:.1e}); radius 1 accepted={} with |Δk_g| {:.9} vs 1 − 1/√3 (error {gap_err:.1e})",
            yes.accepted, yes.residual, no.accepted, no.residual
        ),
    )
}

// 5. General existence through anti-developments.
fn general_existence() -> Check {
    let e = Euclidean { n: 3 };
    let mut r = rng(55);
    let mut iota_err = 0.0f64;
    let samples = [
        curve("helix", &[("kappa", 1.0), ("tau", 0.5), ("len", 4.0)]),
        Wiggle::random(&mut r, DVector::zeros(3), 0.6).curve(1.5, 1501),
        curve("helix", &[("kappa", 0.4), ("tau", -1.2), ("len", 3.0)]),
    ];
    for (k, c) in samples.iter().enumerate() {
        let planted = random_rotation(&mut rng(70 + k as u64), 3);
        let copy = rigid_copy(c, &planted, &v(&[1.0, 2.0, 3.0]));
        let verdict = exists_general(&e, &e, c, &copy, TOL_GEN, &opts()).map_err(err)?;
        if !verdict.accepted {
            return Err(format!("rotated copy {k} rejected: residual {:.2e}", verdict.residual));
        }
        iota_err = iota_err.max((verdict.iota.unwrap() - planted).norm());
    }
    let (y, yh) = exonepoint_pair(2001).map_err(err)?;
    let ex = exists_general(&e, &e, &y, &yh, TOL_GEN, &opts()).map_err(err)?;
    let helix = &samples[0];
    let mirror = rigid_copy(helix, &DMatrix::from_diagonal(&v(&[1.0, 1.0, -1.0])), &DVector::zeros(3));
    let mv = exists_general(&e, &e, helix, &mirror, TOL_GEN, &opts()).map_err(err)?;
    let mi = extract_euclidean_isometry(helix, &mirror, TOL_GEN).map_err(err)?;
    ensure(
        iota_err < 1e-8 && !ex.accepted && ex.residual > TOL_GEN && !mv.accepted && mv.orientation_flag && mi.orientation_flag,
        format!(
            "rotated copies accepted, ι error {iota_err:.1e}; one-point pair rejected with residual {:.3} > {TOL_GEN:e}; mirror helix rejected, orientation flag {}",
            ex.residual, mv.orientation_flag
        ),
    )
}

// 6. Loop closure on surfaces.
fn loop_closure() -> Check {
    let e = Euclidean { n: 2 };
    let s = SphereStereo::new(2);
    let circle = loop_check(&e, &curve("circle", &[("r", 1.0)]), TOL_LOOP, &opts()).map_err(err)?;
    let arc = loop_check(&e, &curve("circle", &[("r", 1.0), ("len", 1.5 * PI)]), TOL_LOOP, &opts()).map_err(err)?;
    let lat = loop_check(&s, &curve("latitude", &[("colat", PI / 3.0)]), TOL_LOOP, &opts()).map_err(err)?;
    let circle_ok = circle.config_loop
        && circle.c1_loop
        && circle.closure_integral.norm() < 1e-6
        && (circle.alpha - 2.0 * PI).abs() < 1e-8;
    let arc_gap = (arc.closure_integral.norm() - 2f64.sqrt()).abs();
    let arc_ok = !arc.config_loop && arc_gap < 1e-6;
    let theta_gap = wrap_angle(lat.theta - PI).abs();
    let lat_ok = !lat.config_loop && theta_gap < 1e-6;
    ensure(
        circle_ok && arc_ok && lat_ok,
        format!(
            "circle: loop {} / C¹ {}, |I| {:.1e}, α − 2π {:.1e}; 3π/2 arc: loop {}, |I| − √2 {arc_gap:.1e}; latitude π/3: loop {}, θ − π {theta_gap:.1e}",
            circle.config_loop,
            circle.c1_loop,
            circle.closure_integral.norm(),
            circle.alpha - 2.0 * PI,
            arc.config_loop,
            lat.config_loop
        ),
    )
}

// 7. Loops in the configuration space.
fn loops_in_q() -> Check {
    let s = SphereStereo::new(2);
    let other = SphereStereo::new(2);
    let e = Euclidean { n: 2 };
    let mut same = true;
    for colat in [PI / 3.0, 1.1] {
        let a = curve("latitude", &[("colat", colat)]);
        let r = loop_in_q(&s, &a, &other, &a.clone(), &opts()).map_err(err)?;
        same &= r.loop_in_q;
    }
    let lat = curve("latitude", &[("colat", PI / 3.0)]);
    let r = 3f64.sqrt();
    let half = curve("circle", &[("r", r), ("len", PI * r)]);
    let mixed = loop_in_q(&s, &lat, &e, &half, &opts()).map_err(err)?;
    let oracle = latitude_holonomy(PI / 3.0);
    let theta_err = wrap_angle(mixed.theta_gap - oracle).abs();
    let angle_err = wrap_angle(mixed.angle_gap - oracle).abs();
    ensure(
        same && !mixed.loop_in_q && theta_err < 1e-6 && angle_err < 1e-6,
        format!(
            "equal latitudes: {same}; latitude vs plane arc: {} with θ gap {:.9} and angle gap {:.9} (Gauss–Bonnet {oracle:.9})",
            mixed.loop_in_q, mixed.theta_gap, mixed.angle_gap
        ),
    )
}

// 8. Development inverts anti-development; anti-development is equivariant.
fn round_trips() -> Check {
    let plane3 = Euclidean { n: 3 };
    let sphere = SphereStereo::new(2);
    let hyper = HyperbolicHalfPlane::default();
    let manifolds: [(&dyn Manifold, &str); 4] = [(&plane3, "euclidean"), (&sphere, "sphere"), (&hyper, "hyperbolic"), (&Su2, "su2")];
    let mut trip = 0.0f64;
    let mut equiv = 0.0f64;
    for (k, (m, _)) in manifolds.iter().enumerate() {
        for i in 0..20u64 {
            let mut r = rng(1000 * k as u64 + i);
            let x = match k {
                0 => Wiggle::random(&mut r, DVector::zeros(3), 0.6).curve(1.0, 501),
                1 => Wiggle::random(&mut r, v(&[0.2, -0.1]), 0.6).curve(1.0, 501),
                2 => Wiggle::random(&mut r, v(&[0.0, 1.5]), 0.5).curve(1.0, 501),
                _ => Wiggle::random(&mut r, v(&[0.6, 0.2, -0.5, 0.3]), 0.5).quaternion_curve(1.0, 501),
            };
            let ad = antidevelop(*m, &x, None, &opts()).map_err(err)?;
            let back = develop(*m, &ad.to_curve().map_err(err)?, &x.xi[0], None, &opts()).map_err(err)?;
            trip = trip.max(sup(back.t.iter().zip(&back.xi).map(|(t, p)| (p - x.eval(*t).0).norm())));
            let r0 = random_rotation(&mut r, m.dim());
            let turned = antidevelop(*m, &x, Some(&r0), &opts()).map_err(err)?;
            equiv = equiv.max(sup(turned.y.iter().zip(&ad.y).map(|(a, b)| (a - r0.transpose() * b).norm())));
        }
    }
    ensure(
        trip < 1e-6 && equiv < 1e-9,
        format!("80 curves over {{ℝ³, S², H², SU(2)}}: round trip {trip:.1e}, equivariance {equiv:.1e}"),
    )
}

/// Adaptive Simpson quadrature, used as an independent Fresnel oracle.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 40)
}

// 9. Synthesis agrees with direct integration and with closed forms.
fn synthesis_consistency() -> Check {
    let e2 = Euclidean { n: 2 };
    let e3 = Euclidean { n: 3 };
    let s2 = SphereStereo::new(2);
    let s3 = SphereStereo::new(3);
    let h2 = HyperbolicHalfPlane::default();
    let g0 = v(&[1.0, 0.0, 0.0, 0.0]);
    let helix = curve("helix", &[("kappa", 1.0), ("tau", 0.5), ("len", 3.0), ("points", 3001.0)]);
    let cases: Vec<RollCase> = vec![
        (&s2, &e2, curve("latitude", &[("colat", PI / 3.0)]), DVector::zeros(2)),
        (&s2, &e2, curve("greatcircle", &[("len", PI / 2.0)]), DVector::zeros(2)),
        (&e2, &s2, curve("circle", &[("r", 1.0)]), v(&[0.1, 0.0])),
        (&e2, &h2, curve("clothoid", &[("len", 2.0)]), v(&[0.0, 1.0])),
        (&e3, &s3, helix.clone(), DVector::zeros(3)),
        (&e3, &Su2, helix, g0.clone()),
    ];
    let mut worst = 0.0f64;
    for (k, (m, mh, x, xh0)) in cases.iter().enumerate() {
        let q0 = random_rotation(&mut rng(300 + k as u64), m.dim());
        let direct = roll_along(*m, *mh, x, &q0, xh0, &opts()).map_err(err)?;
        let built = synthesize_rolling(*m, *mh, x, &q0, xh0, &opts()).map_err(err)?;
        if direct.len() != built.len() {
            return Err(format!("case {k}: grids differ"));
        }
        let dx = sup(direct.xi_hat.iter().zip(&built.xi_hat).map(|(a, b)| (a - b).norm()));
        let dq = sup(direct.q.iter().zip(&built.q).map(|(a, b)| (a - b).amax()));
        worst = worst.max(dx).max(dq);
    }

    let clothoid = CurvatureProfile::from_fn(0.0, 2.0, 201, |s| v(&[s])).map_err(err)?;
    let syn = backend_euclidean(&clothoid, &DVector::zeros(2), &identity(2), &opts()).map_err(err)?;
    let mut fresnel = 0.0f64;
    for i in (0..syn.t.len()).step_by(50) {
        let s = syn.t[i];
        let cx = adaptive_simpson(&|u: f64| (0.5 * u * u).cos(), 0.0, s, 1e-13);
        let cy = adaptive_simpson(&|u: f64| (0.5 * u * u).sin(), 0.0, s, 1e-13);
        fresnel = fresnel.max((&syn.xi[i] - v(&[cx, cy])).norm());
    }

    let profile = CurvatureProfile::from_fn(0.0, 3.0, 301, |s| v(&[1.0 + 0.3 * s.sin(), 0.4 * s.cos()])).map_err(err)?;
    let on_su2 = backend_su2(&profile, &g0, &identity(3), &opts()).map_err(err)?;
    let on_s3 = backend_sphere(&profile, &DVector::zeros(3), &identity(3), &opts()).map_err(err)?;
    let fa = frenet_apparatus(&Su2, &syn_curve(&on_su2)?, EPS_REG).map_err(err)?;
    let fb = frenet_apparatus(&s3, &syn_curve(&on_s3)?, EPS_REG).map_err(err)?;
    let n = fa.t.len();
    let signature = sup((2..n - 2).map(|i| (&fa.kappa[i] - &fb.kappa[i]).amax()));
    ensure(
        worst < 1e-4 && fresnel < 1e-6 && signature < 1e-4,
        format!("6 curves, synthesized vs direct rolling {worst:.1e}; clothoid vs Fresnel {fresnel:.1e}; SU(2) vs S³ curvature signature {signature:.1e}"),
    )
}

// 10. Rank of the minimal parallel distribution.
fn rank_detection() -> Check {
    let s = SphereStereo::new(2);
    let e = Euclidean { n: 3 };
    let geo = minimal_parallel_rank(&s, &curve("greatcircle", &[("len", 2.0)]), EPS_REG, &opts()).map_err(err)?;
    let lat = minimal_parallel_rank(&s, &curve("latitude", &[("colat", 1.0)]), EPS_REG, &opts()).map_err(err)?;
    let hel = minimal_parallel_rank(&e, &curve("helix", &[]), EPS_REG, &opts()).map_err(err)?;
    let ranks = [geo.rank, lat.rank, hel.rank];
    let gaps = [geo.gap, lat.gap, hel.gap];
    ensure(
        ranks == [1, 2, 3] && gaps.iter().all(|g| *g > 1e3),
        format!("ranks {ranks:?} (expected [1, 2, 3]), gaps across the threshold {:.1e} {:.1e} {:.1e}", gaps[0], gaps[1], gaps[2]),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 10] = [
        ("geodesic rolls to a straight segment", geodesic_to_line),
        ("no-slip and no-twist residuals", axiom_residuals),
        ("curvature preservation", curvature_preservation),
        ("existence by geodesic curvature", existence_2d),
        ("existence by anti-development", general_existence),
        ("loop closure", loop_closure),
        ("loops in the configuration space", loops_in_q),
        ("development round trips", round_trips),
        ("synthesis consistency", synthesis_consistency),
        ("rank detection", rank_detection),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg} [{secs:.1}s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg} [{secs:.1}s]", i + 1)
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
