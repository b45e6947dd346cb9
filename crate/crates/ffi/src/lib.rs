//! C ABI for `rollkit`.
//!
//! Objects are opaque handles created by `rk_*_new`-style functions and
//! released with the matching `rk_*_free`. Every fallible call returns an
//! [`RkStatus`]; on failure the message is available from
//! [`rk_last_error`] on the same thread. Matrices cross the boundary
//! row-major. Panics are caught and reported as [`RkStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::{DMatrix, DVector};
use rollkit::curve::{curve_from_spec, SampledCurve};
use rollkit::existence::{exists_general, loop_check};
use rollkit::geometry::{manifold_from_spec, ManifoldRef};
use rollkit::integrate::IntegratorOptions;
use rollkit::rolling::{roll_along, verify_rolling, RollingTrajectory};
use rollkit::transport::antidevelop;
use rollkit::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RkStatus {
    Ok = 0,
    /// The call succeeded and its verdict is negative.
    Reject = 1,
    InvalidInput = 2,
    Numeric = 3,
    NullPointer = 4,
    Panic = 5,
}

/// A manifold model.
pub struct RkManifold(ManifoldRef);

/// A sampled curve in chart coordinates.
pub struct RkCurve(SampledCurve);

/// A rolling trajectory.
pub struct RkTrajectory(RollingTrajectory);

/// Residuals of the rolling axioms.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RkRollingReport {
    pub no_slip: f64,
    pub no_twist: f64,
    pub so_drift: f64,
    pub min_det: f64,
    pub complete: bool,
}

/// Verdict of the general existence test.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RkVerdict {
    pub accepted: bool,
    pub residual: f64,
    pub tolerance: f64,
    pub orientation_flag: bool,
    pub degenerate: bool,
}

/// Loop diagnostics on a surface.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RkLoopReport {
    pub closed: bool,
    pub config_loop: bool,
    pub c1_loop: bool,
    pub theta: f64,
    pub alpha: f64,
    pub closure_re: f64,
    pub closure_im: f64,
    pub length: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend_from_slice(msg.as_bytes());
    });
}

enum Fail {
    Status(RkStatus, String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn null(what: &str) -> Fail {
    Fail::Status(RkStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<RkStatus, Fail>) -> RkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => {
            set_error("");
            status
        }
        Ok(Err(Fail::Status(status, msg))) => {
            set_error(&msg);
            status
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            if e.is_numeric() {
                RkStatus::Numeric
            } else {
                RkStatus::InvalidInput
            }
        }
        Err(_) => {
            set_error("panic inside rollkit");
            RkStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Status(RkStatus::InvalidInput, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<RkStatus, Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(RkStatus::Ok)
}

unsafe fn copy_into(dst: *mut f64, len: usize, src: &[f64]) -> Result<RkStatus, Fail> {
    if dst.is_null() {
        return Err(null("output buffer"));
    }
    if len < src.len() {
        return Err(Fail::Status(
            RkStatus::InvalidInput,
            format!("output buffer holds {len} values, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(RkStatus::Ok)
}

fn options(h: f64) -> IntegratorOptions {
    if h > 0.0 {
        IntegratorOptions::step(h)
    } else {
        IntegratorOptions::default()
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn rk_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = e.len().min(len - 1);
            ptr::copy_nonoverlapping(e.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a manifold from a builtin spec (`sphere_stereo:2`, `su2`, ...) or a spec file path.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rk_manifold_new(spec: *const c_char, out: *mut *mut RkManifold) -> RkStatus {
    guard(|| {
        let spec = str_arg(spec, "spec")?;
        write_out(out, RkManifold(manifold_from_spec(spec)?))
    })
}

/// # Safety
/// `m` must be null or a handle from [`rk_manifold_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rk_manifold_free(m: *mut RkManifold) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Intrinsic dimension, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rk_manifold_dim(m: *const RkManifold) -> usize {
    m.as_ref().map_or(0, |m| m.0.dim())
}

/// Number of chart coordinates, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rk_manifold_coord_dim(m: *const RkManifold) -> usize {
    m.as_ref().map_or(0, |m| m.0.coord_dim())
}

/// Creates a curve from a builtin spec (`circle:r=1`) or a CSV path.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rk_curve_new(spec: *const c_char, out: *mut *mut RkCurve) -> RkStatus {
    guard(|| {
        let spec = str_arg(spec, "spec")?;
        write_out(out, RkCurve(curve_from_spec(spec)?))
    })
}

/// Creates a curve from `samples` points. `xi` and `dxi` hold `samples × coord_dim`
/// values row by row; a null `dxi` means derivatives are estimated by finite differences.
///
/// # Safety
/// `t` must hold `samples` values, `xi` (and `dxi` if non-null) `samples * coord_dim`.
#[no_mangle]
pub unsafe extern "C" fn rk_curve_from_samples(
    samples: usize,
    coord_dim: usize,
    t: *const f64,
    xi: *const f64,
    dxi: *const f64,
    out: *mut *mut RkCurve,
) -> RkStatus {
    guard(|| {
        if coord_dim == 0 {
            return Err(Fail::Status(RkStatus::InvalidInput, "coord_dim must be positive".into()));
        }
        let t = slice(t, samples, "t")?.to_vec();
        let rows = |p: &[f64]| -> Vec<DVector<f64>> { p.chunks(coord_dim).map(DVector::from_column_slice).collect() };
        let xi = rows(slice(xi, samples * coord_dim, "xi")?);
        let curve = if dxi.is_null() {
            SampledCurve::from_points(t, xi)?
        } else {
            SampledCurve::new(t, xi, rows(slice(dxi, samples * coord_dim, "dxi")?))?
        };
        write_out(out, RkCurve(curve))
    })
}

/// # Safety
/// `c` must be null or a live curve handle.
#[no_mangle]
pub unsafe extern "C" fn rk_curve_free(c: *mut RkCurve) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rk_curve_len(c: *const RkCurve) -> usize {
    c.as_ref().map_or(0, |c| c.0.len())
}

/// Copies sample `i` of the curve into `out` (`coord_dim` values).
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rk_curve_point(c: *const RkCurve, i: usize, out: *mut f64, len: usize) -> RkStatus {
    guard(|| {
        let c = &handle(c, "curve")?.0;
        let p = c
            .xi
            .get(i)
            .ok_or_else(|| Fail::Status(RkStatus::InvalidInput, format!("sample {i} out of range")))?;
        copy_into(out, len, p.as_slice())
    })
}

/// Anti-develops `x` into ℝⁿ with the identity initial frame; `h <= 0` selects the default grid.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rk_antidevelop(m: *const RkManifold, x: *const RkCurve, h: f64, out: *mut *mut RkCurve) -> RkStatus {
    guard(|| {
        let m = &handle(m, "manifold")?.0;
        let x = &handle(x, "curve")?.0;
        let ad = antidevelop(m.as_ref(), x, None, &options(h))?;
        write_out(out, RkCurve(ad.to_curve()?))
    })
}

/// Rolls `mh` along `x` on `m`. `q0` (n×n, row-major) and `xh0` (coord_dim of `mh`)
/// may be null for the identity and the chart's default base point. A chart exit
/// still yields a trajectory, with status [`RkStatus::Numeric`].
///
/// # Safety
/// Handles must be live; non-null arrays must have the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn rk_roll(
    m: *const RkManifold,
    mh: *const RkManifold,
    x: *const RkCurve,
    q0: *const f64,
    xh0: *const f64,
    h: f64,
    out: *mut *mut RkTrajectory,
) -> RkStatus {
    guard(|| {
        let m = &handle(m, "manifold")?.0;
        let mh = &handle(mh, "manifold_hat")?.0;
        let x = &handle(x, "curve")?.0;
        let n = m.dim();
        let q0 = if q0.is_null() {
            DMatrix::identity(n, n)
        } else {
            DMatrix::from_row_slice(n, n, slice(q0, n * n, "q0")?)
        };
        let xh0 = if xh0.is_null() {
            rollkit::cli::default_point(mh.as_ref())
        } else {
            DVector::from_column_slice(slice(xh0, mh.coord_dim(), "xh0")?)
        };
        let traj = roll_along(m.as_ref(), mh.as_ref(), x, &q0, &xh0, &options(h))?;
        let exit = traj.exit;
        write_out(out, RkTrajectory(traj))?;
        match exit {
            Some(t) => Err(Fail::Status(
                RkStatus::Numeric,
                format!("rolled curve left the chart of {} at t = {t}", mh.name()),
            )),
            None => Ok(RkStatus::Ok),
        }
    })
}

/// # Safety
/// `t` must be null or a live trajectory handle.
#[no_mangle]
pub unsafe extern "C" fn rk_trajectory_free(t: *mut RkTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rk_trajectory_len(t: *const RkTrajectory) -> usize {
    t.as_ref().map_or(0, |t| t.0.len())
}

/// Copies time, contact point on M̂ and the row-major isometry `q` of sample `i`.
/// `xi_hat` needs the coordinate count of M̂, `q` needs n² values; either may be null.
///
/// # Safety
/// `t_out` must be writable or null; buffers must hold the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn rk_trajectory_sample(
    t: *const RkTrajectory,
    i: usize,
    t_out: *mut f64,
    xi_hat: *mut f64,
    xi_hat_len: usize,
    q: *mut f64,
    q_len: usize,
) -> RkStatus {
    guard(|| {
        let tr = &handle(t, "trajectory")?.0;
        if i >= tr.len() {
            return Err(Fail::Status(RkStatus::InvalidInput, format!("sample {i} out of range")));
        }
        if !t_out.is_null() {
            *t_out = tr.t[i];
        }
        if !xi_hat.is_null() {
            copy_into(xi_hat, xi_hat_len, tr.xi_hat[i].as_slice())?;
        }
        if !q.is_null() {
            copy_into(q, q_len, &row_major(&tr.q[i]))?;
        }
        Ok(RkStatus::Ok)
    })
}

/// Measures the rolling axioms on a trajectory. Returns [`RkStatus::Reject`]
/// when a residual exceeds `tol`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rk_verify(
    m: *const RkManifold,
    mh: *const RkManifold,
    t: *const RkTrajectory,
    probes: usize,
    tol: f64,
    out: *mut RkRollingReport,
) -> RkStatus {
    guard(|| {
        let m = &handle(m, "manifold")?.0;
        let mh = &handle(mh, "manifold_hat")?.0;
        let tr = &handle(t, "trajectory")?.0;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        let rep = verify_rolling(m.as_ref(), mh.as_ref(), tr, probes)?;
        *out = RkRollingReport {
            no_slip: rep.no_slip,
            no_twist: rep.no_twist,
            so_drift: rep.so_drift,
            min_det: rep.min_det,
            complete: rep.exit.is_none(),
        };
        Ok(if rep.passes(tol) { RkStatus::Ok } else { RkStatus::Reject })
    })
}

/// General existence test. `iota` (n² values, row-major) receives the fitted
/// isometry when non-null. Returns [`RkStatus::Reject`] for a negative verdict.
///
/// # Safety
/// Handles must be live; `out` must be writable; `iota` must hold `iota_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rk_exists_general(
    m: *const RkManifold,
    mh: *const RkManifold,
    x: *const RkCurve,
    xh: *const RkCurve,
    tol: f64,
    h: f64,
    out: *mut RkVerdict,
    iota: *mut f64,
    iota_len: usize,
) -> RkStatus {
    guard(|| {
        let m = &handle(m, "manifold")?.0;
        let mh = &handle(mh, "manifold_hat")?.0;
        let x = &handle(x, "curve")?.0;
        let xh = &handle(xh, "curve_hat")?.0;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        let v = exists_general(m.as_ref(), mh.as_ref(), x, xh, tol, &options(h))?;
        *out = RkVerdict {
            accepted: v.accepted,
            residual: v.residual,
            tolerance: v.tolerance,
            orientation_flag: v.orientation_flag,
            degenerate: v.degenerate,
        };
        if let (false, Some(i)) = (iota.is_null(), &v.iota) {
            copy_into(iota, iota_len, &row_major(i))?;
        }
        Ok(if v.accepted { RkStatus::Ok } else { RkStatus::Reject })
    })
}

/// Loop diagnostics of a curve on a surface. Returns [`RkStatus::Reject`]
/// when the rolling along the curve is not a loop.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rk_loop_check(
    m: *const RkManifold,
    x: *const RkCurve,
    tol: f64,
    h: f64,
    out: *mut RkLoopReport,
) -> RkStatus {
    guard(|| {
        let m = &handle(m, "manifold")?.0;
        let x = &handle(x, "curve")?.0;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        let l = loop_check(m.as_ref(), x, tol, &options(h))?;
        *out = RkLoopReport {
            closed: l.closed,
            config_loop: l.config_loop,
            c1_loop: l.c1_loop,
            theta: l.theta,
            alpha: l.alpha,
            closure_re: l.closure_integral.re,
            closure_im: l.closure_integral.im,
            length: l.length,
        };
        Ok(if l.config_loop { RkStatus::Ok } else { RkStatus::Reject })
    })
}
