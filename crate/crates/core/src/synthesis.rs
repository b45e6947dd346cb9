//! Curves and rollings reconstructed from geodesic curvatures.
//!
//! A curvature profile `κ₁ … κ_{n−1}` fixes the antisymmetric tridiagonal
//! matrix `K(t)`. The curve on `M̂` and its Frenet frame `a(t)` (columns in
//! frame components) solve
//!
//! ```text
//! ξ̂̇ = φ̂ a e₁,    ȧ = a K − Γ̂(a e₁) a.
//! ```

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::curve::{parse_csv, SampledCurve};
use crate::error::{Error, Result};
use crate::frenet::{curvature_matrix, frenet_apparatus, EPS_REG};
use crate::geometry::{ensure_inside, quat_mul, lie_algebra_quaternion, Manifold, Point, Su2};
use crate::integrate::{pack, rk4, unpack, IntegratorOptions};
use crate::linalg::{check_rotation, differentiate, orthonormalize};
use crate::rolling::RollingTrajectory;
use crate::transport::ROTATION_TOL;

type ProfileFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;

/// Geodesic curvatures as functions of arc length.
#[derive(Clone)]
pub struct CurvatureProfile {
    pub t: Vec<f64>,
    pub kappa: Vec<DVector<f64>>,
    slopes: Vec<DVector<f64>>,
    exact: Option<ProfileFn>,
}

impl std::fmt::Debug for CurvatureProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CurvatureProfile")
            .field("dim", &self.dim())
            .field("span", &(self.t0(), self.t1()))
            .field("samples", &self.t.len())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl CurvatureProfile {
    /// Sampled profile, interpolated by cubic Hermite splines with
    /// finite-difference slopes (linear for fewer than five samples).
    pub fn from_samples(t: Vec<f64>, kappa: Vec<DVector<f64>>) -> Result<Self> {
        if t.len() < 2 || kappa.len() != t.len() {
            return Err(Error::Mismatch(format!("{} times and {} curvature samples", t.len(), kappa.len())));
        }
        if let Some(i) = t.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::GridNotIncreasing(i + 1));
        }
        let slopes = if t.len() >= 5 {
            differentiate(&t, &kappa)?
        } else {
            let d = (&kappa[kappa.len() - 1] - &kappa[0]) / (t[t.len() - 1] - t[0]);
            vec![d; t.len()]
        };
        let p = Self {
            t,
            kappa,
            slopes,
            exact: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Profile given by a function on `[t0, t1]`, evaluated exactly inside
    /// the integrator; `samples` points are stored for reporting.
    pub fn from_fn(t0: f64, t1: f64, samples: usize, f: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static) -> Result<Self> {
        let t = crate::curve::uniform_grid(t0, t1, samples.max(2) - 1);
        let kappa: Vec<DVector<f64>> = t.iter().map(|s| f(*s)).collect();
        let mut p = Self::from_samples(t, kappa)?;
        p.exact = Some(Arc::new(f));
        Ok(p)
    }

    pub fn constant(kappa: &[f64], length: f64) -> Result<Self> {
        let k = DVector::from_column_slice(kappa);
        Self::from_fn(0.0, length, 2, move |_| k.clone())
    }

    fn validate(&self) -> Result<()> {
        let n1 = self.kappa[0].len();
        for (i, k) in self.kappa.iter().enumerate() {
            if k.len() != n1 {
                return Err(Error::InvalidDimension("inconsistent curvature sample lengths".into()));
            }
            for j in 0..n1.saturating_sub(1) {
                if k[j] < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "kappa_{} = {} < 0 at t = {}; only the last curvature may be negative",
                        j + 1,
                        k[j],
                        self.t[i]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Dimension `n` of the manifold the profile describes.
    pub fn dim(&self) -> usize {
        self.kappa[0].len() + 1
    }

    pub fn t0(&self) -> f64 {
        self.t[0]
    }

    pub fn t1(&self) -> f64 {
        *self.t.last().unwrap()
    }

    pub fn eval(&self, s: f64) -> DVector<f64> {
        if let Some(f) = &self.exact {
            return f(s);
        }
        let s = s.clamp(self.t0(), self.t1());
        let i = match self.t.binary_search_by(|v| v.total_cmp(&s)) {
            Ok(i) => return self.kappa[i].clone(),
            Err(i) => i - 1,
        };
        let h = self.t[i + 1] - self.t[i];
        let u = (s - self.t[i]) / h;
        let (u2, u3) = (u * u, u * u * u);
        &self.kappa[i] * (2.0 * u3 - 3.0 * u2 + 1.0)
            + &self.slopes[i] * (h * (u3 - 2.0 * u2 + u))
            + &self.kappa[i + 1] * (-2.0 * u3 + 3.0 * u2)
            + &self.slopes[i + 1] * (h * (u3 - u2))
    }

    pub fn matrix(&self, s: f64) -> DMatrix<f64> {
        curvature_matrix(&self.eval(s))
    }

    /// Reads `t, kappa_1 .. kappa_{n−1}`.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let (header, rows) = parse_csv(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let ok = header.first().map(String::as_str) == Some("t")
            && header.len() >= 2
            && header[1..].iter().enumerate().all(|(j, h)| *h == format!("kappa_{}", j + 1));
        if !ok {
            return Err(Error::Parse(format!("{}: expected header t,kappa_1,...", path.display())));
        }
        let t = rows.iter().map(|r| r[0]).collect();
        let kappa = rows.iter().map(|r| DVector::from_column_slice(&r[1..])).collect();
        Self::from_samples(t, kappa)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("t");
        for j in 1..self.dim() {
            out.push_str(&format!(",kappa_{j}"));
        }
        out.push('\n');
        for (t, k) in self.t.iter().zip(&self.kappa) {
            out.push_str(&t.to_string());
            for v in k.iter() {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// A synthesized curve with its Frenet frame.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub t: Vec<f64>,
    pub xi: Vec<Point>,
    pub dxi: Vec<DVector<f64>>,
    /// Frenet frames; column `j` is `v̂_{j+1}` in frame components.
    pub a: Vec<DMatrix<f64>>,
    pub exit: Option<f64>,
}

impl Synthesis {
    pub fn to_curve(&self) -> Result<SampledCurve> {
        Ok(SampledCurve::new(self.t.clone(), self.xi.clone(), self.dxi.clone())?.with_flags(true, false))
    }
}

fn check_frame(a0: &DMatrix<f64>, n: usize) -> Result<()> {
    if a0.nrows() != n || a0.ncols() != n {
        return Err(Error::InvalidDimension(format!("initial frame is {}x{}, expected {n}x{n}", a0.nrows(), a0.ncols())));
    }
    check_rotation(a0, ROTATION_TOL)
}

/// Shared integrator: `velocity(ξ, a₁)` gives `ξ̇`, `twist(ξ, a₁)` the
/// matrix `T` in `ȧ = aK − T a`.
fn integrate_frenet(
    profile: &CurvatureProfile,
    x0: &Point,
    a0: &DMatrix<f64>,
    opts: &IntegratorOptions,
    velocity: impl Fn(&Point, &DVector<f64>) -> DVector<f64>,
    twist: impl Fn(&Point, &DVector<f64>) -> Option<DMatrix<f64>>,
    project: impl Fn(&mut Point),
    inside: impl Fn(&Point) -> bool,
) -> Result<Synthesis> {
    let n = profile.dim();
    check_frame(a0, n)?;
    let c = x0.len();
    let grid = opts.grid(profile.t0(), profile.t1())?;
    let mut s0 = DVector::zeros(c + n * n);
    s0.rows_mut(0, c).copy_from(x0);
    pack(&mut s0, c, a0);
    let run = rk4(
        &grid,
        s0,
        |t, s| {
            let xi = s.rows(0, c).clone_owned();
            let a = unpack(s, c, n);
            let a1 = a.column(0).clone_owned();
            let mut da = &a * profile.matrix(t);
            if let Some(tw) = twist(&xi, &a1) {
                da -= tw * &a;
            }
            let mut out = DVector::zeros(c + n * n);
            out.rows_mut(0, c).copy_from(&velocity(&xi, &a1));
            pack(&mut out, c, &da);
            out
        },
        |s| {
            let mut xi = s.rows(0, c).clone_owned();
            project(&mut xi);
            s.rows_mut(0, c).copy_from(&xi);
            let mut a = unpack(s, c, n);
            orthonormalize(&mut a);
            pack(s, c, &a);
        },
        |s| inside(&s.rows(0, c).clone_owned()),
    );
    let mut out = Synthesis {
        t: run.t.clone(),
        xi: Vec::with_capacity(run.t.len()),
        dxi: Vec::with_capacity(run.t.len()),
        a: Vec::with_capacity(run.t.len()),
        exit: run.exit,
    };
    for s in &run.states {
        let xi = s.rows(0, c).clone_owned();
        let a = unpack(s, c, n);
        out.dxi.push(velocity(&xi, &a.column(0).clone_owned()));
        out.xi.push(xi);
        out.a.push(a);
    }
    Ok(out)
}

/// Curve on `M̂` with the given curvatures, starting at `x̂0` with Frenet frame `a0`.
pub fn synthesize_curve(
    mh: &dyn Manifold,
    profile: &CurvatureProfile,
    xh0: &Point,
    a0: &DMatrix<f64>,
    opts: &IntegratorOptions,
) -> Result<Synthesis> {
    if profile.dim() != mh.dim() {
        return Err(Error::InvalidDimension(format!(
            "profile describes dimension {}, {} has dimension {}",
            profile.dim(),
            mh.name(),
            mh.dim()
        )));
    }
    ensure_inside(mh, xh0)?;
    integrate_frenet(
        profile,
        xh0,
        a0,
        opts,
        |xi, a1| mh.from_frame(xi, a1),
        |xi, a1| Some(mh.connection(xi, a1)),
        |xi| mh.project(xi),
        |xi| mh.contains(xi),
    )
}

/// Frenet–Serret equations in ℝⁿ: `ẋ = a e₁`, `ȧ = aK`.
pub fn backend_euclidean(profile: &CurvatureProfile, x0: &Point, a0: &DMatrix<f64>, opts: &IntegratorOptions) -> Result<Synthesis> {
    if x0.len() != profile.dim() {
        return Err(Error::InvalidDimension(format!("start point has {} coordinates, profile needs {}", x0.len(), profile.dim())));
    }
    integrate_frenet(profile, x0, a0, opts, |_, a1| a1.clone(), |_, _| None, |_| {}, |x| x.iter().all(|v| v.is_finite()))
}

/// Stereographic chart of the unit sphere:
/// `ξ̇ = ((1+|ξ|²)/2) a₁`, `ȧ = aK + (a₁ξᵀ − ξa₁ᵀ) a`.
pub fn backend_sphere(profile: &CurvatureProfile, x0: &Point, a0: &DMatrix<f64>, opts: &IntegratorOptions) -> Result<Synthesis> {
    let n = profile.dim();
    let sphere = crate::geometry::SphereStereo::new(n);
    if x0.len() != n {
        return Err(Error::InvalidDimension(format!("start point has {} coordinates, profile needs {n}", x0.len())));
    }
    ensure_inside(&sphere, x0)?;
    integrate_frenet(
        profile,
        x0,
        a0,
        opts,
        |xi, a1| a1 * (0.5 * (1.0 + xi.norm_squared())),
        |xi, a1| Some(xi * a1.transpose() - a1 * xi.transpose()),
        |_| {},
        |xi| sphere.contains(xi),
    )
}

/// SU(2) with the left-invariant frame: the frame equation reduces to
/// `ȧ = a (K − [e₁]×)`, that is
///
/// ```text
/// ȧ = a · [[0, −κ₁, 0], [κ₁, 0, −(κ₂−1)], [0, κ₂−1, 0]],
/// ```
///
/// and the curve follows `ġ = g ⋆ (a₁₁ i + a₂₁ j + a₃₁ k)`, renormalized each step.
pub fn backend_su2(profile: &CurvatureProfile, g0: &Point, a0: &DMatrix<f64>, opts: &IntegratorOptions) -> Result<Synthesis> {
    if profile.dim() != 3 {
        return Err(Error::InvalidDimension(format!("su2 needs a profile with two curvatures, got {}", profile.dim() - 1)));
    }
    if g0.len() != 4 || (g0.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter("g0 must be a unit quaternion".into()));
    }
    let e1_cross = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0]);
    let reduced = CurvatureProfileShift { inner: profile, shift: e1_cross };
    let mut out = integrate_reduced(&reduced, g0, a0, opts)?;
    out.dxi = out
        .xi
        .iter()
        .zip(&out.a)
        .map(|(g, a)| quat_mul(g, &lie_algebra_quaternion(&a.column(0).clone_owned())))
        .collect();
    Ok(out)
}

/// `K(t) − S` for a constant shift `S`.
struct CurvatureProfileShift<'a> {
    inner: &'a CurvatureProfile,
    shift: DMatrix<f64>,
}

fn integrate_reduced(p: &CurvatureProfileShift<'_>, g0: &Point, a0: &DMatrix<f64>, opts: &IntegratorOptions) -> Result<Synthesis> {
    check_frame(a0, 3)?;
    let grid = opts.grid(p.inner.t0(), p.inner.t1())?;
    let mut s0 = DVector::zeros(4 + 9);
    s0.rows_mut(0, 4).copy_from(g0);
    pack(&mut s0, 4, a0);
    let run = rk4(
        &grid,
        s0,
        |t, s| {
            let g = s.rows(0, 4).clone_owned();
            let a = unpack(s, 4, 3);
            let w = lie_algebra_quaternion(&a.column(0).clone_owned());
            let mut out = DVector::zeros(13);
            out.rows_mut(0, 4).copy_from(&quat_mul(&g, &w));
            pack(&mut out, 4, &(&a * (p.inner.matrix(t) - &p.shift)));
            out
        },
        |s| {
            let mut g = s.rows(0, 4).clone_owned();
            Su2.project(&mut g);
            s.rows_mut(0, 4).copy_from(&g);
            let mut a = unpack(s, 4, 3);
            orthonormalize(&mut a);
            pack(s, 4, &a);
        },
        |_| true,
    );
    Ok(Synthesis {
        t: run.t,
        xi: run.states.iter().map(|s| s.rows(0, 4).clone_owned()).collect(),
        dxi: Vec::new(),
        a: run.states.iter().map(|s| unpack(s, 4, 3)).collect(),
        exit: run.exit,
    })
}

/// Rolling along `x` built from curvatures: the image curve is synthesized
/// on `M̂` from the Frenet data of `x` and `q(t)` maps `v_j(t)` to `v̂_j(t)`.
///
/// `x` is resampled on the integration grid. It must be unit-speed with
/// `κ₁ … κ_{n−2}` bounded away from zero; otherwise integrate the rolling
/// directly with [`crate::rolling::roll_along`].
pub fn synthesize_rolling(
    m: &dyn Manifold,
    mh: &dyn Manifold,
    x: &SampledCurve,
    q0: &DMatrix<f64>,
    xh0: &Point,
    opts: &IntegratorOptions,
) -> Result<RollingTrajectory> {
    if m.dim() != mh.dim() {
        return Err(Error::InvalidDimension(format!("dimensions {} and {}", m.dim(), mh.dim())));
    }
    let n = m.dim();
    check_frame(q0, n)?;
    let grid = opts.grid(x.t0(), x.t1())?;
    let xs = x.restrict(x.t0(), x.t1(), grid.len() - 1)?.with_flags(x.arc_length, false);
    let frenet = frenet_apparatus(m, &xs, EPS_REG)?;
    for j in 0..n.saturating_sub(2) {
        if let Some(i) = (0..frenet.t.len()).find(|&i| !(frenet.kappa[i][j] > EPS_REG)) {
            return Err(Error::Regularity {
                index: j + 1,
                t: frenet.t[i],
                hint: "curvatures vanish here; integrate the rolling directly instead",
            });
        }
    }
    let profile = CurvatureProfile::from_samples(frenet.t.clone(), frenet.kappa.clone())?;
    let a0 = q0 * &frenet.v[0];
    let syn = synthesize_curve(mh, &profile, xh0, &a0, &IntegratorOptions::steps(grid.len() - 1))?;
    let len = syn.t.len();
    Ok(RollingTrajectory {
        t: syn.t.clone(),
        xi: xs.xi[..len].to_vec(),
        dxi: xs.dxi[..len].to_vec(),
        xi_hat: syn.xi.clone(),
        dxi_hat: syn.dxi.clone(),
        q: syn.a.iter().zip(&frenet.v).map(|(a, v)| a * v.transpose()).collect(),
        exit: syn.exit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Euclidean, SphereStereo};
    use std::f64::consts::PI;

    #[test]
    fn zero_profile_gives_great_circle() {
        let p = CurvatureProfile::constant(&[0.0], 2.0).unwrap();
        let s = backend_sphere(&p, &DVector::zeros(2), &DMatrix::identity(2, 2), &IntegratorOptions::step(1e-3)).unwrap();
        for (t, x) in s.t.iter().zip(&s.xi) {
            assert!((x[0] - (0.5 * t).tan()).abs() < 1e-10 && x[1].abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_backend_matches_generic() {
        let p = CurvatureProfile::from_fn(0.0, 3.0, 50, |t| DVector::from_vec(vec![0.5 + 0.2 * t, -0.3])).unwrap();
        let a0 = DMatrix::identity(3, 3);
        let x0 = DVector::from_vec(vec![0.1, -0.2, 0.3]);
        let opts = IntegratorOptions::steps(1000);
        let a = backend_sphere(&p, &x0, &a0, &opts).unwrap();
        let b = synthesize_curve(&SphereStereo::new(3), &p, &x0, &a0, &opts).unwrap();
        let gap = a.xi.iter().zip(&b.xi).map(|(u, v)| (u - v).norm()).fold(0.0f64, f64::max);
        assert!(gap < 1e-10, "gap {gap}");
    }

    #[test]
    fn euclidean_backend_matches_generic() {
        let p = CurvatureProfile::constant(&[1.0, 0.5], 5.0).unwrap();
        let x0 = DVector::zeros(3);
        let opts = IntegratorOptions::steps(500);
        let a = backend_euclidean(&p, &x0, &DMatrix::identity(3, 3), &opts).unwrap();
        let b = synthesize_curve(&Euclidean { n: 3 }, &p, &x0, &DMatrix::identity(3, 3), &opts).unwrap();
        let gap = a.xi.iter().zip(&b.xi).map(|(u, v)| (u - v).norm()).fold(0.0f64, f64::max);
        assert!(gap < 1e-12, "gap {gap}");
    }

    #[test]
    fn plane_circle() {
        let p = CurvatureProfile::constant(&[1.0], 2.0 * PI).unwrap();
        let s = backend_euclidean(&p, &DVector::zeros(2), &DMatrix::identity(2, 2), &IntegratorOptions::step(1e-3)).unwrap();
        for (t, x) in s.t.iter().zip(&s.xi) {
            assert!((x - DVector::from_vec(vec![t.sin(), 1.0 - t.cos()])).norm() < 1e-10);
        }
    }

    #[test]
    fn su2_zero_profile_is_one_parameter_subgroup() {
        let p = CurvatureProfile::constant(&[0.0, 0.0], 2.0).unwrap();
        let g0 = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let s = backend_su2(&p, &g0, &DMatrix::identity(3, 3), &IntegratorOptions::steps(400)).unwrap();
        for (t, g) in s.t.iter().zip(&s.xi) {
            let expect = DVector::from_vec(vec![t.cos(), t.sin(), 0.0, 0.0]);
            assert!((g - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn su2_backend_matches_generic() {
        let p = CurvatureProfile::constant(&[0.8, 0.3], 3.0).unwrap();
        let g0 = DVector::from_vec(vec![0.5, 0.5, 0.5, 0.5]);
        let opts = IntegratorOptions::steps(600);
        let a = backend_su2(&p, &g0, &DMatrix::identity(3, 3), &opts).unwrap();
        let b = synthesize_curve(&Su2, &p, &g0, &DMatrix::identity(3, 3), &opts).unwrap();
        let gap = a.xi.iter().zip(&b.xi).map(|(u, v)| (u - v).norm()).fold(0.0f64, f64::max);
        assert!(gap < 1e-10, "gap {gap}");
    }

    #[test]
    fn negative_leading_curvature_is_rejected() {
        assert!(matches!(
            CurvatureProfile::constant(&[-1.0, 0.5], 1.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(CurvatureProfile::constant(&[1.0, -0.5], 1.0).is_ok());
    }

    #[test]
    fn profile_csv_round_trip() {
        let p = CurvatureProfile::from_samples(
            vec![0.0, 0.5, 1.0],
            vec![DVector::from_vec(vec![1.0, 0.1]), DVector::from_vec(vec![1.5, 0.2]), DVector::from_vec(vec![2.0, -0.3])],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k.csv");
        p.write_csv(&path).unwrap();
        let q = CurvatureProfile::read_csv(&path).unwrap();
        assert_eq!(q.t, p.t);
        assert_eq!(q.kappa, p.kappa);
    }
}
