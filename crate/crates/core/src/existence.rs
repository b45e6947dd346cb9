//! Numeric verdicts on whether a rolling exists along a pair of curves.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::curve::SampledCurve;
use crate::error::{Error, Result};
use crate::frenet::{frenet_apparatus, reparametrize_arclength, FrenetData, EPS_REG, UNIT_SPEED_TOL};
use crate::geometry::{Euclidean, Manifold};
use crate::integrate::IntegratorOptions;
use crate::linalg::{procrustes, wrap_angle};
use crate::rolling::{verify_rolling, RollingTrajectory};
use crate::transport::{antidevelop, AntiDevelopment};

pub const TOL_CURV: f64 = 1e-4;
pub const TOL_GEN: f64 = 1e-5;
pub const TOL_LOOP: f64 = 1e-6;
pub const TOL_ANGLE: f64 = 1e-6;
/// Default search radius, in arc length, for a regular sample near a junction.
pub const JUNCTION_MAX_GAP: f64 = 0.25;
/// Curvature a sample needs before its Frenet frame is used at a junction.
pub const JUNCTION_MIN_KAPPA: f64 = 1e-4;
/// Jump in `k_g` between neighbouring samples that marks a curve as not C².
pub const C2_JUMP: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Curvature2d,
    CurvatureNd,
    AntidevSoN,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Curvature2d => "curvature2d",
            Method::CurvatureNd => "curvatureND",
            Method::AntidevSoN => "antidev_so_n",
        })
    }
}

/// Outcome of an existence test. `details` lists each gate's measured value.
#[derive(Debug, Clone)]
pub struct ExistenceVerdict {
    pub accepted: bool,
    pub method: Method,
    pub iota: Option<DMatrix<f64>>,
    pub residual: f64,
    pub tolerance: f64,
    /// The best orthogonal fit was a reflection.
    pub orientation_flag: bool,
    /// Both curves were constant, so any rotation fits.
    pub degenerate: bool,
    pub details: Vec<(String, f64)>,
}

impl ExistenceVerdict {
    pub fn detail(&self, key: &str) -> Option<f64> {
        self.details.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

fn is_unit_speed(m: &dyn Manifold, c: &SampledCurve) -> bool {
    c.arc_length || c.speeds(m).iter().all(|s| (s - 1.0).abs() <= UNIT_SPEED_TOL)
}

/// Unit-speed version of `c`, reparametrized only when needed.
fn unit_speed(m: &dyn Manifold, c: &SampledCurve) -> Result<SampledCurve> {
    if is_unit_speed(m, c) {
        let mut u = c.clone();
        u.arc_length = true;
        Ok(u)
    } else {
        reparametrize_arclength(m, c, None)
    }
}

/// Fails unless `κ₁ … κ_{n−2}` stay above `eps` on the interior.
fn require_frenet(data: &FrenetData, eps: f64) -> Result<()> {
    let n = data.dim();
    let len = data.t.len();
    for j in 0..n.saturating_sub(2) {
        for i in 2..len - 2 {
            let k = data.kappa[i][j];
            if !(k > eps) {
                return Err(Error::Regularity {
                    index: j + 1,
                    t: data.t[i],
                    hint: "curvatures vanish here; use the general anti-development test",
                });
            }
        }
    }
    Ok(())
}

/// Compares geodesic curvatures over the common arc-length interval.
///
/// Curves that are not unit-speed are reparametrized first. On acceptance
/// the rolling `q = V̂Vᵀ` built from the two Frenet frames is checked with
/// [`verify_rolling`] and its residuals are added to the details.
pub fn exists_by_curvature(
    m: &dyn Manifold,
    mh: &dyn Manifold,
    x: &SampledCurve,
    xh: &SampledCurve,
    tol: f64,
) -> Result<ExistenceVerdict> {
    if m.dim() != mh.dim() {
        return Err(Error::InvalidDimension(format!("dimensions {} and {}", m.dim(), mh.dim())));
    }
    let n = m.dim();
    let xu = unit_speed(m, x)?;
    let xhu = unit_speed(mh, xh)?;
    let (len, len_hat) = (xu.span(), xhu.span());
    let common = len.min(len_hat);
    let samples = x.len().max(xh.len()).max(5);
    let a = xu.restrict(xu.t0(), xu.t0() + common, samples - 1)?.with_flags(true, false);
    let b = xhu.restrict(xhu.t0(), xhu.t0() + common, samples - 1)?.with_flags(true, false);
    let fa = frenet_apparatus(m, &a, EPS_REG)?;
    let fb = frenet_apparatus(mh, &b, EPS_REG)?;
    require_frenet(&fa, EPS_REG)?;
    require_frenet(&fb, EPS_REG)?;

    let mut details = Vec::new();
    let mut residual = 0.0f64;
    for j in 0..n - 1 {
        let gap = (2..samples - 2)
            .map(|i| (fa.kappa[i][j] - fb.kappa[i][j]).abs())
            .fold(0.0f64, f64::max);
        details.push((format!("kappa_{}_gap", j + 1), gap));
        residual = residual.max(gap);
    }
    details.push(("length".into(), len));
    details.push(("length_hat".into(), len_hat));
    details.push(("compared_length".into(), common));
    let accepted = residual < tol;
    if accepted {
        let traj = RollingTrajectory {
            t: a.t.clone(),
            xi: a.xi.clone(),
            dxi: a.dxi.clone(),
            xi_hat: b.xi.clone(),
            dxi_hat: b.dxi.clone(),
            q: fa.v.iter().zip(&fb.v).map(|(v, vh)| vh * v.transpose()).collect(),
            exit: None,
        };
        let rep = verify_rolling(m, mh, &traj, 2)?;
        details.push(("verify_no_slip".into(), rep.no_slip));
        details.push(("verify_no_twist".into(), rep.no_twist));
        details.push(("verify_so_drift".into(), rep.so_drift));
    }
    Ok(ExistenceVerdict {
        accepted,
        method: if n == 2 { Method::Curvature2d } else { Method::CurvatureNd },
        iota: None,
        residual,
        tolerance: tol,
        orientation_flag: false,
        degenerate: false,
        details,
    })
}

/// Curve `c` evaluated on the grid of `reference`.
fn on_grid(reference: &SampledCurve, c: &SampledCurve) -> Result<SampledCurve> {
    let scale = reference.span().abs().max(1.0);
    if (reference.t0() - c.t0()).abs() > 1e-9 * scale || (reference.t1() - c.t1()).abs() > 1e-9 * scale {
        return Err(Error::Mismatch(format!(
            "parameter intervals [{}, {}] and [{}, {}] differ",
            reference.t0(),
            reference.t1(),
            c.t0(),
            c.t1()
        )));
    }
    if reference.t == c.t {
        return Ok(c.clone());
    }
    let (xi, dxi): (Vec<_>, Vec<_>) = reference.t.iter().map(|s| c.eval(*s)).unzip();
    SampledCurve::new(reference.t.clone(), xi, dxi)
}

/// Trapezoid weights of a grid.
fn grid_weights(t: &[f64]) -> Vec<f64> {
    let n = t.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { t[i] - t[i - 1] } else { 0.0 };
            let right = if i + 1 < n { t[i + 1] - t[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// Weighted Procrustes fit of `b ≈ ι a` with the two-gate acceptance rule.
struct RotationFit {
    iota: DMatrix<f64>,
    deriv_residual: f64,
    pos_residual: f64,
    length: f64,
    reflection: bool,
    degenerate: bool,
}

fn fit_rotation(
    t: &[f64],
    da: &[DVector<f64>],
    db: &[DVector<f64>],
    pa: &[DVector<f64>],
    pb: &[DVector<f64>],
) -> RotationFit {
    let n = da[0].len();
    let w = grid_weights(t);
    let length: f64 = da.iter().zip(&w).map(|(d, w)| d.norm() * w).sum();
    let (iota, det, degenerate) = match procrustes(da, db, &w) {
        Some(fit) => (fit.rotation, fit.unconstrained_det, false),
        None => (DMatrix::identity(n, n), 1.0, true),
    };
    let deriv_residual = da
        .iter()
        .zip(db)
        .map(|(a, b)| (b - &iota * a).norm())
        .fold(0.0f64, f64::max);
    let pos_residual = pa
        .iter()
        .zip(pb)
        .map(|(a, b)| (b - &iota * a).norm())
        .fold(0.0f64, f64::max);
    RotationFit {
        iota,
        deriv_residual,
        pos_residual,
        length,
        reflection: det < 0.0,
        degenerate,
    }
}

/// Tests whether the anti-developments differ by a rotation.
///
/// Both curves are anti-developed from the identity frame on the grid set by
/// `opts`; `ι` is fitted on the derivative samples and accepted when both
/// `sup ‖ẏ̂ − ιẏ‖ < tol` and `sup ‖ŷ − ιy‖ < tol · length`.
pub fn exists_general(
    m: &dyn Manifold,
    mh: &dyn Manifold,
    x: &SampledCurve,
    xh: &SampledCurve,
    tol: f64,
    opts: &IntegratorOptions,
) -> Result<ExistenceVerdict> {
    if m.dim() != mh.dim() {
        return Err(Error::InvalidDimension(format!("dimensions {} and {}", m.dim(), mh.dim())));
    }
    let xh = on_grid(x, xh)?;
    let y = antidevelop(m, x, None, opts)?;
    let yh = antidevelop(mh, &xh, None, opts)?;
    Ok(verdict_from_antidev(&y, &yh, tol))
}

/// The verdict of [`exists_general`] for anti-developments computed on a
/// common grid from arbitrary initial frames.
pub fn verdict_from_antidev(y: &AntiDevelopment, yh: &AntiDevelopment, tol: f64) -> ExistenceVerdict {
    let fit = fit_rotation(&y.t, &y.dy, &yh.dy, &y.y, &yh.y);
    let pos_tol = tol * fit.length;
    let accepted = fit.degenerate || (fit.deriv_residual < tol && fit.pos_residual < pos_tol);
    ExistenceVerdict {
        accepted,
        method: Method::AntidevSoN,
        orientation_flag: !accepted && fit.reflection,
        degenerate: fit.degenerate,
        residual: fit.deriv_residual,
        tolerance: tol,
        details: vec![
            ("derivative_residual".into(), fit.deriv_residual),
            ("position_residual".into(), fit.pos_residual),
            ("position_tolerance".into(), pos_tol),
            ("length".into(), fit.length),
        ],
        iota: Some(fit.iota),
    }
}

/// Loop diagnostics for a curve on a surface.
#[derive(Debug, Clone)]
pub struct LoopReport {
    pub closed: bool,
    /// Holonomy angle of the parallel frame, in (−π, π].
    pub theta: f64,
    /// Total turning `∫ k_g`.
    pub alpha: f64,
    /// `∫₀^τ exp(i ∫₀ᵗ k_g) dt`.
    pub closure_integral: Complex64,
    pub config_loop: bool,
    pub c1_loop: bool,
    pub length: f64,
}

/// Turning angle `v(t)` of a unit-speed curve against its parallel frame,
/// unwrapped and starting at 0.
fn turning_angle(ad: &AntiDevelopment) -> Vec<f64> {
    let mut out = Vec::with_capacity(ad.dy.len());
    let mut prev = ad.dy[0][1].atan2(ad.dy[0][0]);
    let mut acc = 0.0;
    out.push(0.0);
    for d in &ad.dy[1..] {
        let a = d[1].atan2(d[0]);
        acc += wrap_angle(a - prev);
        prev = a;
        out.push(acc);
    }
    out
}

/// Composite Simpson on a uniform grid (3/8 rule on the last panel for odd counts).
fn simpson(t: &[f64], f: &[Complex64]) -> Complex64 {
    let n = t.len() - 1;
    if n == 0 {
        return Complex64::new(0.0, 0.0);
    }
    if n == 1 {
        return (f[0] + f[1]) * (0.5 * (t[1] - t[0]));
    }
    let h = (t[n] - t[0]) / n as f64;
    let even = if n.is_multiple_of(2) { n } else { n - 3 };
    let mut s = Complex64::new(0.0, 0.0);
    let mut i = 0;
    while i < even {
        s += (f[i] + f[i + 1] * 4.0 + f[i + 2]) * (h / 3.0);
        i += 2;
    }
    if even < n {
        s += (f[even] + f[even + 1] * 3.0 + f[even + 2] * 3.0 + f[even + 3]) * (3.0 * h / 8.0);
    }
    s
}

/// Fails when the geodesic curvature jumps: an isolated step of more than
/// [`C2_JUMP`] well above the variation a few samples away.
fn check_c2(m: &dyn Manifold, c: &SampledCurve) -> Result<()> {
    let data = frenet_apparatus(m, c, EPS_REG)?;
    let k: Vec<f64> = data.kappa.iter().map(|k| k[k.len() - 1]).collect();
    let d: Vec<f64> = k.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let reach = 6;
    for i in 0..d.len() {
        let left = if i >= reach { d[i - reach] } else { 0.0 };
        let right = d.get(i + reach).copied().unwrap_or(0.0);
        if d[i] > C2_JUMP + 10.0 * left.max(right) {
            return Err(Error::NotC2 { t: c.t[i], jump: d[i] });
        }
    }
    Ok(())
}

fn is_closed(c: &SampledCurve) -> bool {
    let scale = c.xi.iter().map(|x| x.norm()).fold(1.0f64, f64::max);
    c.closed || c.endpoint_gap() < 1e-9 * scale
}

/// Holonomy, turning and closure integral of a curve on a surface.
///
/// Curves that are not closed get a report with `config_loop = false`.
/// Curves whose geodesic curvature jumps are refused with [`Error::NotC2`].
pub fn loop_check(m: &dyn Manifold, x: &SampledCurve, tol_loop: f64, opts: &IntegratorOptions) -> Result<LoopReport> {
    if m.dim() != 2 {
        return Err(Error::InvalidDimension(format!("loop diagnostics need a surface, {} has dimension {}", m.name(), m.dim())));
    }
    let closed = is_closed(x);
    let xu = unit_speed(m, x)?;
    check_c2(m, &xu)?;
    let ad = antidevelop(m, &xu, None, opts)?;
    let h = ad.r.last().unwrap();
    let theta = h[(1, 0)].atan2(h[(0, 0)]);
    let v = turning_angle(&ad);
    let alpha = *v.last().unwrap();
    let f: Vec<Complex64> = v.iter().map(|a| Complex64::from_polar(1.0, *a)).collect();
    let closure_integral = simpson(&ad.t, &f);
    let config_loop = closed && wrap_angle(theta).abs() < TOL_ANGLE && closure_integral.norm() < tol_loop;
    let c1_loop = config_loop && wrap_angle(alpha).abs() < TOL_ANGLE;
    Ok(LoopReport {
        closed,
        theta: wrap_angle(theta),
        alpha,
        closure_integral,
        config_loop,
        c1_loop,
        length: xu.span(),
    })
}

/// Whether a rolling along two loops on surfaces closes up in the
/// configuration space.
#[derive(Debug, Clone)]
pub struct LoopInQ {
    pub loop_in_q: bool,
    pub closed: bool,
    pub closed_hat: bool,
    pub theta: f64,
    pub theta_hat: f64,
    pub alpha: f64,
    pub alpha_hat: f64,
    /// Lifted angle `∠(ẋ(0), ẋ(τ)) = α + θ`; the signed angle rotating the first vector to the second.
    pub angle: f64,
    pub angle_hat: f64,
    /// `θ − θ̂` in (−π, π].
    pub theta_gap: f64,
    /// `∠ − ∠̂` in (−π, π].
    pub angle_gap: f64,
    /// `α − α̂`; nonzero means no rolling relates the curves at all.
    pub turning_gap: f64,
}

/// Both curves must be loops and their parallel frames must come back
/// rotated by the same angle.
pub fn loop_in_q(
    m: &dyn Manifold,
    x: &SampledCurve,
    mh: &dyn Manifold,
    xh: &SampledCurve,
    opts: &IntegratorOptions,
) -> Result<LoopInQ> {
    let a = loop_check(m, x, TOL_LOOP, opts)?;
    let b = loop_check(mh, xh, TOL_LOOP, opts)?;
    let angle = a.alpha + a.theta;
    let angle_hat = b.alpha + b.theta;
    let theta_gap = wrap_angle(a.theta - b.theta);
    let angle_gap = wrap_angle(angle - angle_hat);
    Ok(LoopInQ {
        loop_in_q: a.closed && b.closed && theta_gap.abs() < TOL_ANGLE,
        closed: a.closed,
        closed_hat: b.closed,
        theta: a.theta,
        theta_hat: b.theta,
        alpha: a.alpha,
        alpha_hat: b.alpha,
        angle,
        angle_hat,
        theta_gap,
        angle_gap,
        turning_gap: a.alpha - b.alpha,
    })
}

/// Frame-compatibility defect at an interior junction.
#[derive(Debug, Clone)]
pub struct JunctionReport {
    /// `Gᵢⱼ = ⟨vᵢ, wⱼ⟩ − ⟨v̂ᵢ, ŵⱼ⟩` at the junction.
    pub g: DMatrix<f64>,
    pub norm: f64,
    /// Arc-length offsets from the junction of the samples whose frames
    /// were used: left and right of `x`, then left and right of `x̂`.
    pub offsets: [f64; 4],
}

/// Frenet frame of the sample closest to `b` on one side of a junction whose
/// curvatures `κ₁ … κ_{n−2}` exceed [`JUNCTION_MIN_KAPPA`].
fn frame_near(m: &dyn Manifold, piece: &SampledCurve, b: f64, max_gap: f64) -> Result<(DMatrix<f64>, f64)> {
    let data = frenet_apparatus(m, piece, EPS_REG)?;
    let n = data.dim();
    let mut best: Option<(usize, f64)> = None;
    for i in 0..data.t.len() {
        let ok = data.defined[i] == n && (0..n.saturating_sub(2)).all(|j| data.kappa[i][j] > JUNCTION_MIN_KAPPA);
        if ok {
            let gap = (data.t[i] - b).abs();
            if best.is_none_or(|(_, g)| gap < g) {
                best = Some((i, gap));
            }
        }
    }
    match best {
        Some((i, gap)) if gap <= max_gap => Ok((data.v[i].clone(), gap)),
        Some((_, gap)) => Err(Error::NotExtendable { t: b, gap }),
        None => Err(Error::NotExtendable { t: b, gap: f64::INFINITY }),
    }
}

/// Compares how the Frenet frames of `x` and `x̂` jump at the interior time
/// `b`. A rolling along the pair forces `G = 0`.
pub fn junction_compatibility(
    m: &dyn Manifold,
    mh: &dyn Manifold,
    x: &SampledCurve,
    xh: &SampledCurve,
    b: f64,
    max_gap: f64,
) -> Result<JunctionReport> {
    if m.dim() != mh.dim() {
        return Err(Error::InvalidDimension(format!("dimensions {} and {}", m.dim(), mh.dim())));
    }
    for c in [x, xh] {
        if !(b > c.t0() && b < c.t1()) {
            return Err(Error::InvalidParameter(format!("junction {b} is not interior to [{}, {}]", c.t0(), c.t1())));
        }
    }
    let steps = |c: &SampledCurve, a: f64, e: f64| (((e - a) / c.span()) * (c.len() - 1) as f64).ceil().max(8.0) as usize;
    // each side is reparametrized on its own, so its junction end keeps full stencil accuracy
    let halves = |mm: &dyn Manifold, c: &SampledCurve| -> Result<(DMatrix<f64>, f64, DMatrix<f64>, f64)> {
        let left = unit_speed(mm, &c.restrict(c.t0(), b, steps(c, c.t0(), b))?)?;
        let right = unit_speed(mm, &c.restrict(b, c.t1(), steps(c, b, c.t1()))?)?;
        let (v, gv) = frame_near(mm, &left, left.t1(), max_gap)?;
        let (w, gw) = frame_near(mm, &right, right.t0(), max_gap)?;
        Ok((v, gv, w, gw))
    };
    let (v, gv, w, gw) = halves(m, x)?;
    let (vh, gvh, wh, gwh) = halves(mh, xh)?;
    let g = v.transpose() * w - vh.transpose() * wh;
    let norm = crate::linalg::max_abs(&g);
    Ok(JunctionReport {
        g,
        norm,
        offsets: [gv, gw, gvh, gwh],
    })
}

/// Numerical rank of the anti-development velocities.
#[derive(Debug, Clone)]
pub struct RankReport {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// `σ_rank / σ_{rank+1}`, with `ε·σ_max` standing in for `σ_{rank+1}`
    /// when the rank is full.
    pub gap: f64,
}

/// Dimension of the smallest parallel distribution containing `ẋ`.
pub fn minimal_parallel_rank(m: &dyn Manifold, x: &SampledCurve, eps: f64, opts: &IntegratorOptions) -> Result<RankReport> {
    let n = m.dim();
    let ad = antidevelop(m, x, None, opts)?;
    let w = grid_weights(&ad.t);
    let mut a = DMatrix::zeros(n, ad.dy.len());
    for (j, (d, wj)) in ad.dy.iter().zip(&w).enumerate() {
        a.set_column(j, &(d * wj.sqrt()));
    }
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(|p, q| q.total_cmp(p));
    let max = sv.first().copied().unwrap_or(0.0);
    if !(max > 0.0) {
        return Ok(RankReport {
            rank: 0,
            singular_values: sv,
            gap: 0.0,
        });
    }
    let rank = sv.iter().filter(|s| **s > eps * max).count();
    let below = sv.get(rank).copied().unwrap_or(eps * max).max(f64::MIN_POSITIVE);
    let gap = sv[rank - 1] / below;
    Ok(RankReport {
        rank,
        singular_values: sv,
        gap,
    })
}

/// Rigid motion `x̂ ≈ ι x + b` between two Euclidean curves.
#[derive(Debug, Clone)]
pub struct IsometryFit {
    pub accepted: bool,
    pub iota: DMatrix<f64>,
    pub translation: DVector<f64>,
    pub residual: f64,
    pub tolerance: f64,
    /// Rejected, and the best orthogonal fit is a reflection.
    pub orientation_flag: bool,
}

pub fn extract_euclidean_isometry(x: &SampledCurve, xh: &SampledCurve, tol: f64) -> Result<IsometryFit> {
    if x.coord_dim() != xh.coord_dim() {
        return Err(Error::InvalidDimension(format!("{} and {} coordinates", x.coord_dim(), xh.coord_dim())));
    }
    let xh = on_grid(x, xh)?;
    let pa: Vec<DVector<f64>> = x.xi.iter().map(|p| p - &x.xi[0]).collect();
    let pb: Vec<DVector<f64>> = xh.xi.iter().map(|p| p - &xh.xi[0]).collect();
    let fit = fit_rotation(&x.t, &x.dxi, &xh.dxi, &pa, &pb);
    let translation = &xh.xi[0] - &fit.iota * &x.xi[0];
    let residual = x
        .xi
        .iter()
        .zip(&xh.xi)
        .map(|(a, b)| (b - (&fit.iota * a + &translation)).norm())
        .fold(0.0f64, f64::max);
    let length = x.length(&Euclidean { n: x.coord_dim() });
    let tolerance = tol * length.max(f64::MIN_POSITIVE);
    let accepted = residual < tolerance;
    Ok(IsometryFit {
        accepted,
        orientation_flag: !accepted && fit.reflection,
        iota: fit.iota,
        translation,
        residual,
        tolerance,
    })
}

/// `|∫₀^φ e^{it} dt| = 2|sin(φ/2)|`, the closure integral of a circular arc
/// of total turning `φ` traversed at unit speed on the unit circle.
pub fn arc_closure_modulus(turning: f64) -> f64 {
    2.0 * (0.5 * turning).sin().abs()
}

/// Holonomy angle of a latitude circle of colatitude `theta` on the unit sphere.
pub fn latitude_holonomy(theta: f64) -> f64 {
    wrap_angle(2.0 * PI * (1.0 - theta.cos()))
}
