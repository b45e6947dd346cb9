//! Rolling of one manifold on another along a prescribed curve.
//!
//! The state is the contact point `ξ̂` on `M̂` and the matrix `Q` that maps
//! frame components on `M` to frame components on `M̂`:
//!
//! ```text
//! ξ̂̇ = φ̂ Q u,    Q̇ = Q Γ(u) − Γ̂(Q u) Q,    u = φ⁻¹ ξ̇.
//! ```
//!
//! Under a change of frames `e' = e A`, `ê' = ê Â` the matrix becomes
//! `Q' = Âᵀ Q A`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curve::{parse_csv, SampledCurve};
use crate::error::{Error, Result};
use crate::frenet::covariant_derivative;
use crate::geometry::{ensure_inside, Manifold, Point};
use crate::integrate::{pack, rk4, unpack, IntegratorOptions};
use crate::linalg::{differentiate, orthogonality_defect, orthonormalize};
use crate::transport::{check_initial_rotation, frame_velocity, parallel_frame_on};

/// Samples of a rolling `q(t)` together with both contact curves.
#[derive(Debug, Clone)]
pub struct RollingTrajectory {
    pub t: Vec<f64>,
    pub xi: Vec<Point>,
    pub dxi: Vec<DVector<f64>>,
    pub xi_hat: Vec<Point>,
    pub dxi_hat: Vec<DVector<f64>>,
    pub q: Vec<DMatrix<f64>>,
    /// Time at which `ξ̂` left the chart of `M̂`; the samples stop just before it.
    pub exit: Option<f64>,
}

impl RollingTrajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.q[0].nrows()
    }

    pub fn base_curve(&self) -> Result<SampledCurve> {
        SampledCurve::new(self.t.clone(), self.xi.clone(), self.dxi.clone())
    }

    pub fn hat_curve(&self) -> Result<SampledCurve> {
        SampledCurve::new(self.t.clone(), self.xi_hat.clone(), self.dxi_hat.clone())
    }

    /// The same rolling traversed backwards in time.
    pub fn reversed(&self) -> Self {
        let (a, b) = (self.t[0], *self.t.last().unwrap());
        Self {
            t: self.t.iter().rev().map(|s| a + b - s).collect(),
            xi: self.xi.iter().rev().cloned().collect(),
            dxi: self.dxi.iter().rev().map(|d| -d).collect(),
            xi_hat: self.xi_hat.iter().rev().cloned().collect(),
            dxi_hat: self.dxi_hat.iter().rev().map(|d| -d).collect(),
            q: self.q.iter().rev().cloned().collect(),
            exit: None,
        }
    }

    /// Writes `t, xi_*, xihat_*, q_ij` with `q` row-major.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn to_csv(&self) -> String {
        let (m, mh, n) = (self.xi[0].len(), self.xi_hat[0].len(), self.dim());
        let mut head = vec!["t".to_string()];
        head.extend((1..=m).map(|i| format!("xi_{i}")));
        head.extend((1..=mh).map(|i| format!("xihat_{i}")));
        for i in 1..=n {
            head.extend((1..=n).map(|j| format!("q_{i}{j}")));
        }
        let mut out = head.join(",");
        out.push('\n');
        for k in 0..self.len() {
            let mut row = vec![self.t[k].to_string()];
            row.extend(self.xi[k].iter().map(f64::to_string));
            row.extend(self.xi_hat[k].iter().map(f64::to_string));
            for i in 0..n {
                row.extend((0..n).map(|j| self.q[k][(i, j)].to_string()));
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Reads a trajectory file; velocities are finite-differenced.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (header, rows) = parse_csv(text).map_err(Error::Parse)?;
        let m = header.iter().filter(|h| h.starts_with("xi_")).count();
        let mh = header.iter().filter(|h| h.starts_with("xihat_")).count();
        let nq = header.iter().filter(|h| h.starts_with("q_")).count();
        let n = (nq as f64).sqrt().round() as usize;
        if header.first().map(String::as_str) != Some("t") || m == 0 || mh == 0 || n * n != nq || header.len() != 1 + m + mh + nq {
            return Err(Error::Parse("bad trajectory header".into()));
        }
        let t: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let xi: Vec<Point> = rows.iter().map(|r| DVector::from_column_slice(&r[1..1 + m])).collect();
        let xi_hat: Vec<Point> = rows.iter().map(|r| DVector::from_column_slice(&r[1 + m..1 + m + mh])).collect();
        let q = rows
            .iter()
            .map(|r| DMatrix::from_row_slice(n, n, &r[1 + m + mh..]))
            .collect();
        let dxi = differentiate(&t, &xi)?;
        let dxi_hat = differentiate(&t, &xi_hat)?;
        Ok(Self {
            t,
            xi,
            dxi,
            xi_hat,
            dxi_hat,
            q,
            exit: None,
        })
    }
}

fn check_pair(m: &dyn Manifold, mh: &dyn Manifold) -> Result<()> {
    if m.dim() != mh.dim() {
        return Err(Error::InvalidDimension(format!(
            "{} has dimension {}, {} has dimension {}",
            m.name(),
            m.dim(),
            mh.name(),
            mh.dim()
        )));
    }
    Ok(())
}

/// Rolls `M̂` along the curve `x` on `M`, starting from `(x̂0, q0)`.
///
/// Leaving the chart of `M̂` is not an error: the trajectory up to the exit
/// is returned with `exit` set.
pub fn roll_along(
    m: &dyn Manifold,
    mh: &dyn Manifold,
    x: &SampledCurve,
    q0: &DMatrix<f64>,
    xh0: &Point,
    opts: &IntegratorOptions,
) -> Result<RollingTrajectory> {
    check_pair(m, mh)?;
    x.check_inside(m)?;
    ensure_inside(mh, xh0)?;
    let n = m.dim();
    let c = mh.coord_dim();
    let q0 = check_initial_rotation(m, Some(q0))?;
    let grid = opts.grid(x.t0(), x.t1())?;
    let mut s0 = DVector::zeros(c + n * n);
    s0.rows_mut(0, c).copy_from(xh0);
    pack(&mut s0, c, &q0);
    let run = rk4(
        &grid,
        s0,
        |t, s| {
            let (xi, u) = frame_velocity(m, x, t);
            let xh = s.rows(0, c).clone_owned();
            let q = unpack(s, c, n);
            let uh = &q * &u;
            let mut out = DVector::zeros(c + n * n);
            out.rows_mut(0, c).copy_from(&mh.from_frame(&xh, &uh));
            let dq = &q * m.connection(&xi, &u) - mh.connection(&xh, &uh) * &q;
            pack(&mut out, c, &dq);
            out
        },
        |s| {
            let mut xh = s.rows(0, c).clone_owned();
            mh.project(&mut xh);
            s.rows_mut(0, c).copy_from(&xh);
            let mut q = unpack(s, c, n);
            orthonormalize(&mut q);
            pack(s, c, &q);
        },
        |s| mh.contains(&s.rows(0, c).clone_owned()),
    );
    let len = run.t.len();
    let mut traj = RollingTrajectory {
        t: Vec::with_capacity(len),
        xi: Vec::with_capacity(len),
        dxi: Vec::with_capacity(len),
        xi_hat: Vec::with_capacity(len),
        dxi_hat: Vec::with_capacity(len),
        q: Vec::with_capacity(len),
        exit: run.exit,
    };
    for (t, s) in run.t.iter().zip(&run.states) {
        let (xi, dxi) = x.eval(*t);
        let u = m.to_frame(&xi, &dxi);
        let xh = s.rows(0, c).clone_owned();
        let q = unpack(s, c, n);
        traj.dxi_hat.push(mh.from_frame(&xh, &(&q * u)));
        traj.t.push(*t);
        traj.xi.push(xi);
        traj.dxi.push(dxi);
        traj.xi_hat.push(xh);
        traj.q.push(q);
    }
    Ok(traj)
}

/// Residuals of the rolling axioms measured on a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RollingReport {
    /// `max ‖û − q u‖` with `û` finite-differenced from the samples of `ξ̂`.
    pub no_slip: f64,
    /// `max ‖D̂(qZ) − q DZ‖` over the probe fields `Z`.
    pub no_twist: f64,
    /// `max ‖qᵀq − I‖∞`.
    pub so_drift: f64,
    pub min_det: f64,
    pub probes: usize,
    pub samples: usize,
    pub exit: Option<f64>,
}

impl RollingReport {
    pub fn max_residual(&self) -> f64 {
        self.no_slip.max(self.no_twist).max(self.so_drift)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() < tol && self.min_det > 0.0 && self.exit.is_none()
    }
}

/// Seed of the probe generator; verification is deterministic.
pub const PROBE_SEED: u64 = 0x005e_ed0f_2011;

/// Checks no slip, no twist and `q ∈ SO(n)` on an arbitrary trajectory.
///
/// The no-twist test transports `probes` random unit vectors parallel along
/// `x`, maps them with `q` and differentiates covariantly along `x̂`.
pub fn verify_rolling(
    m: &dyn Manifold,
    mh: &dyn Manifold,
    traj: &RollingTrajectory,
    probes: usize,
) -> Result<RollingReport> {
    check_pair(m, mh)?;
    let len = traj.len();
    if len < 5 {
        return Err(Error::GridTooShort { got: len, need: 5 });
    }
    let n = m.dim();
    let x = traj.base_curve()?;
    let xh_fd = SampledCurve::from_points(traj.t.clone(), traj.xi_hat.clone())?;

    let mut no_slip = 0.0f64;
    for i in 0..len {
        let u = m.to_frame(&traj.xi[i], &traj.dxi[i]);
        let uh = mh.to_frame(&xh_fd.xi[i], &xh_fd.dxi[i]);
        no_slip = no_slip.max((uh - &traj.q[i] * u).norm());
    }

    let mut no_twist = 0.0f64;
    if probes > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
        let mut z0 = DMatrix::zeros(n, probes);
        for mut col in z0.column_iter_mut() {
            col.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
            let norm = col.norm();
            col /= norm;
        }
        let fc = parallel_frame_on(m, &x, &z0, &traj.t)?;
        for p in 0..probes {
            let z: Vec<DVector<f64>> = fc.r.iter().map(|r| r.column(p).clone_owned()).collect();
            let zh: Vec<DVector<f64>> = z.iter().zip(&traj.q).map(|(z, q)| q * z).collect();
            let dz = covariant_derivative(m, &x, &z)?;
            let dzh = covariant_derivative(mh, &xh_fd, &zh)?;
            for i in 0..len {
                no_twist = no_twist.max((&dzh[i] - &traj.q[i] * &dz[i]).norm());
            }
        }
    }

    let so_drift = traj.q.iter().map(orthogonality_defect).fold(0.0f64, f64::max);
    let min_det = traj.q.iter().map(|q| q.determinant()).fold(f64::INFINITY, f64::min);
    Ok(RollingReport {
        no_slip,
        no_twist,
        so_drift,
        min_det,
        probes,
        samples: len,
        exit: traj.exit,
    })
}

/// Composes a rolling of `M` on `M̂` with one of `M̂` on `M̃`.
///
/// The second trajectory must run along the contact curve of the first on
/// the same grid; `tol` bounds the allowed mismatch.
pub fn compose_rollings(first: &RollingTrajectory, second: &RollingTrajectory, tol: f64) -> Result<RollingTrajectory> {
    if first.len() != second.len() {
        return Err(Error::Mismatch(format!(
            "grids of {} and {} samples",
            first.len(),
            second.len()
        )));
    }
    if first.dim() != second.dim() {
        return Err(Error::InvalidDimension(format!(
            "composing rollings of dimension {} and {}",
            first.dim(),
            second.dim()
        )));
    }
    for i in 0..first.len() {
        let dt = (first.t[i] - second.t[i]).abs();
        let dx = (&first.xi_hat[i] - &second.xi[i]).norm();
        if dt > tol || dx > tol {
            return Err(Error::Mismatch(format!(
                "contact curves differ by {dx:.3e} at t = {} (grid offset {dt:.3e})",
                first.t[i]
            )));
        }
    }
    Ok(RollingTrajectory {
        t: first.t.clone(),
        xi: first.xi.clone(),
        dxi: first.dxi.clone(),
        xi_hat: second.xi_hat.clone(),
        dxi_hat: second.dxi_hat.clone(),
        q: second.q.iter().zip(&first.q).map(|(b, a)| b * a).collect(),
        exit: first.exit.or(second.exit),
    })
}
