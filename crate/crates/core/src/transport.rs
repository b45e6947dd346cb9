//! Parallel transport, anti-development and development.
//!
//! Frames are stored as rotation matrices `R` whose columns are the
//! frame components of parallel vector fields: `Ṙ = −Γ(u)R` along a curve
//! with frame velocity `u`.

use nalgebra::{DMatrix, DVector};

use crate::curve::SampledCurve;
use crate::error::{Error, Result};
use crate::geometry::{Manifold, Point};
use crate::integrate::{pack, rk4, unpack, IntegratorOptions};
use crate::linalg::{check_rotation, orthonormalize};

pub(crate) const ROTATION_TOL: f64 = 1e-8;

/// Frame velocity `u = φ⁻¹ξ̇` of `curve` at `t`.
pub(crate) fn frame_velocity(m: &dyn Manifold, curve: &SampledCurve, t: f64) -> (Point, DVector<f64>) {
    let (xi, dxi) = curve.eval(t);
    let u = m.to_frame(&xi, &dxi);
    (xi, u)
}

pub(crate) fn check_curve(m: &dyn Manifold, curve: &SampledCurve) -> Result<()> {
    curve.check_inside(m)
}

pub(crate) fn check_initial_rotation(m: &dyn Manifold, r0: Option<&DMatrix<f64>>) -> Result<DMatrix<f64>> {
    let n = m.dim();
    match r0 {
        None => Ok(DMatrix::identity(n, n)),
        Some(r) => {
            if r.nrows() != n {
                return Err(Error::InvalidDimension(format!("initial frame is {}x{}, expected {n}x{n}", r.nrows(), r.ncols())));
            }
            check_rotation(r, ROTATION_TOL)?;
            Ok(r.clone())
        }
    }
}

/// A parallel orthonormal frame along a curve.
#[derive(Debug, Clone)]
pub struct FrameCurve {
    pub t: Vec<f64>,
    pub xi: Vec<Point>,
    pub r: Vec<DMatrix<f64>>,
}

/// Transports the columns of `r0` along `curve`.
///
/// `r0` need not be square: any `n × k` block of frame components works.
/// Square orthonormal blocks are re-orthonormalized after every step.
pub fn parallel_frame(
    m: &dyn Manifold,
    curve: &SampledCurve,
    r0: &DMatrix<f64>,
    opts: &IntegratorOptions,
) -> Result<FrameCurve> {
    let grid = opts.grid(curve.t0(), curve.t1())?;
    parallel_frame_on(m, curve, r0, &grid)
}

/// [`parallel_frame`] on an explicit grid.
pub(crate) fn parallel_frame_on(
    m: &dyn Manifold,
    curve: &SampledCurve,
    r0: &DMatrix<f64>,
    grid: &[f64],
) -> Result<FrameCurve> {
    check_curve(m, curve)?;
    let n = m.dim();
    if r0.nrows() != n {
        return Err(Error::InvalidDimension(format!("frame has {} rows, manifold dimension is {n}", r0.nrows())));
    }
    let k = r0.ncols();
    let rigid = k == n && crate::linalg::orthogonality_defect(r0) < ROTATION_TOL;
    let y0 = DVector::from_column_slice(r0.as_slice());
    let run = rk4(
        grid,
        y0,
        |t, y| {
            let (xi, u) = frame_velocity(m, curve, t);
            let r = DMatrix::from_column_slice(n, k, y.as_slice());
            let dr = -m.connection(&xi, &u) * r;
            DVector::from_column_slice(dr.as_slice())
        },
        |y| {
            if rigid {
                let mut r = unpack(y, 0, n);
                orthonormalize(&mut r);
                pack(y, 0, &r);
            }
        },
        |_| true,
    );
    let r = run
        .states
        .iter()
        .map(|y| DMatrix::from_column_slice(n, k, y.as_slice()))
        .collect();
    let xi = run.t.iter().map(|t| curve.eval(*t).0).collect();
    Ok(FrameCurve { t: run.t, xi, r })
}

/// Parallel transport of one vector, given and returned in frame components.
pub fn parallel_transport(
    m: &dyn Manifold,
    curve: &SampledCurve,
    w0: &DVector<f64>,
    opts: &IntegratorOptions,
) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
    let block = DMatrix::from_column_slice(w0.len(), 1, w0.as_slice());
    let fc = parallel_frame(m, curve, &block, opts)?;
    Ok((fc.t, fc.r.into_iter().map(|r| r.column(0).clone_owned()).collect()))
}

/// Anti-development of a curve into ℝⁿ together with its parallel frame.
#[derive(Debug, Clone)]
pub struct AntiDevelopment {
    pub t: Vec<f64>,
    pub y: Vec<DVector<f64>>,
    pub dy: Vec<DVector<f64>>,
    pub r: Vec<DMatrix<f64>>,
}

impl AntiDevelopment {
    pub fn to_curve(&self) -> Result<SampledCurve> {
        SampledCurve::new(self.t.clone(), self.y.clone(), self.dy.clone())
    }
}

/// Integrates `ẏ = Rᵀu`, `Ṙ = −Γ(u)R` from `y(t₀) = 0`, `R(t₀) = r0` (identity by default).
pub fn antidevelop(
    m: &dyn Manifold,
    curve: &SampledCurve,
    r0: Option<&DMatrix<f64>>,
    opts: &IntegratorOptions,
) -> Result<AntiDevelopment> {
    check_curve(m, curve)?;
    let n = m.dim();
    let r0 = check_initial_rotation(m, r0)?;
    let grid = opts.grid(curve.t0(), curve.t1())?;
    let mut y0 = DVector::zeros(n + n * n);
    pack(&mut y0, n, &r0);
    let run = rk4(
        &grid,
        y0,
        |t, s| {
            let (xi, u) = frame_velocity(m, curve, t);
            let r = unpack(s, n, n);
            let mut out = DVector::zeros(n + n * n);
            out.rows_mut(0, n).copy_from(&(r.transpose() * &u));
            pack(&mut out, n, &(-m.connection(&xi, &u) * r));
            out
        },
        |s| {
            let mut r = unpack(s, n, n);
            orthonormalize(&mut r);
            pack(s, n, &r);
        },
        |_| true,
    );
    let mut y = Vec::with_capacity(run.t.len());
    let mut dy = Vec::with_capacity(run.t.len());
    let mut r = Vec::with_capacity(run.t.len());
    for (t, s) in run.t.iter().zip(&run.states) {
        let rt = unpack(s, n, n);
        let (_, u) = frame_velocity(m, curve, *t);
        y.push(s.rows(0, n).clone_owned());
        dy.push(rt.transpose() * u);
        r.push(rt);
    }
    Ok(AntiDevelopment { t: run.t, y, dy, r })
}

/// Development of a Euclidean curve onto a manifold.
///
/// When the developed curve leaves the chart, the accepted prefix is kept
/// and `exit` records the time.
#[derive(Debug, Clone)]
pub struct Development {
    pub t: Vec<f64>,
    pub xi: Vec<Point>,
    pub dxi: Vec<DVector<f64>>,
    pub r: Vec<DMatrix<f64>>,
    pub exit: Option<f64>,
    pub manifold: String,
}

impl Development {
    pub fn to_curve(&self) -> Result<SampledCurve> {
        SampledCurve::new(self.t.clone(), self.xi.clone(), self.dxi.clone())
    }

    pub fn complete(&self) -> Result<()> {
        match self.exit {
            Some(t) => Err(Error::ChartExit {
                manifold: self.manifold.clone(),
                t,
            }),
            None => Ok(()),
        }
    }
}

/// Integrates `ξ̇ = φRẏ`, `Ṙ = −Γ(Rẏ)R` starting at `xi0`.
pub fn develop(
    m: &dyn Manifold,
    y: &SampledCurve,
    xi0: &Point,
    r0: Option<&DMatrix<f64>>,
    opts: &IntegratorOptions,
) -> Result<Development> {
    let n = m.dim();
    let c = m.coord_dim();
    if y.coord_dim() != n {
        return Err(Error::InvalidDimension(format!(
            "Euclidean curve has {} coordinates, {} has dimension {n}",
            y.coord_dim(),
            m.name()
        )));
    }
    crate::geometry::ensure_inside(m, xi0)?;
    let r0 = check_initial_rotation(m, r0)?;
    let grid = opts.grid(y.t0(), y.t1())?;
    let mut s0 = DVector::zeros(c + n * n);
    s0.rows_mut(0, c).copy_from(xi0);
    pack(&mut s0, c, &r0);
    let run = rk4(
        &grid,
        s0,
        |t, s| {
            let xi = s.rows(0, c).clone_owned();
            let r = unpack(s, c, n);
            let v = &r * y.eval(t).1;
            let mut out = DVector::zeros(c + n * n);
            out.rows_mut(0, c).copy_from(&m.from_frame(&xi, &v));
            pack(&mut out, c, &(-m.connection(&xi, &v) * r));
            out
        },
        |s| {
            let mut xi = s.rows(0, c).clone_owned();
            m.project(&mut xi);
            s.rows_mut(0, c).copy_from(&xi);
            let mut r = unpack(s, c, n);
            orthonormalize(&mut r);
            pack(s, c, &r);
        },
        |s| m.contains(&s.rows(0, c).clone_owned()),
    );
    let mut xi = Vec::with_capacity(run.t.len());
    let mut dxi = Vec::with_capacity(run.t.len());
    let mut r = Vec::with_capacity(run.t.len());
    for (t, s) in run.t.iter().zip(&run.states) {
        let p = s.rows(0, c).clone_owned();
        let rt = unpack(s, c, n);
        dxi.push(m.from_frame(&p, &(&rt * y.eval(*t).1)));
        xi.push(p);
        r.push(rt);
    }
    Ok(Development {
        t: run.t,
        xi,
        dxi,
        r,
        exit: run.exit,
        manifold: m.name(),
    })
}

/// Holonomy of the Levi-Civita connection around a curve.
#[derive(Debug, Clone)]
pub struct Holonomy {
    /// `R(0)ᵀR(τ)` for the transported identity frame.
    pub matrix: DMatrix<f64>,
    /// Rotation angle `atan2(H₂₁, H₁₁)` for surfaces.
    pub angle: Option<f64>,
}

pub fn holonomy(m: &dyn Manifold, curve: &SampledCurve, opts: &IntegratorOptions) -> Result<Holonomy> {
    let n = m.dim();
    let fc = parallel_frame(m, curve, &DMatrix::identity(n, n), opts)?;
    let matrix = fc.r[0].transpose() * fc.r.last().unwrap();
    let angle = (n == 2).then(|| matrix[(1, 0)].atan2(matrix[(0, 0)]));
    Ok(Holonomy { matrix, angle })
}
