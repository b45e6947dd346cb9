//! Frenet frames, geodesic curvatures and regularity detection.
//!
//! All vectors are frame components. Covariant derivatives are taken from
//! five-point finite differences on the curve's own grid, so the first and
//! last two samples are less accurate than the interior.

use nalgebra::{DMatrix, DVector};

use crate::curve::{uniform_grid, SampledCurve};
use crate::error::{Error, Result};
use crate::geometry::Manifold;
use crate::linalg::{complete_oriented_basis, differentiate, gauss5};

/// Default relative threshold below which a curvature counts as vanishing.
pub const EPS_REG: f64 = 1e-7;
/// Speeds below this are treated as a vanishing derivative.
pub const EPS_SPEED: f64 = 1e-10;
/// Accepted deviation from unit speed for curves not flagged as arc-length.
pub const UNIT_SPEED_TOL: f64 = 1e-6;

/// `D/dt w = ẇ + Γ(u)w` for samples `w` on the grid of `c`.
pub fn covariant_derivative(m: &dyn Manifold, c: &SampledCurve, w: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    if w.len() != c.len() {
        return Err(Error::Mismatch(format!("{} field samples on a grid of {}", w.len(), c.len())));
    }
    let mut d = differentiate(&c.t, w)?;
    for (i, di) in d.iter_mut().enumerate() {
        let u = m.to_frame(&c.xi[i], &c.dxi[i]);
        *di += m.connection(&c.xi[i], &u) * &w[i];
    }
    Ok(d)
}

/// Where the Frenet recursion first broke down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityFailure {
    /// Index `j` of the curvature `κ_j` that vanished.
    pub index: usize,
    pub t: f64,
}

/// Frenet apparatus of a unit-speed curve.
///
/// Entries that could not be defined (after a vanishing curvature) are NaN;
/// `defined[i]` counts the leading Frenet fields available at sample `i`.
#[derive(Debug, Clone)]
pub struct FrenetData {
    pub t: Vec<f64>,
    /// Columns are `v₁ … vₙ`.
    pub v: Vec<DMatrix<f64>>,
    /// `κ₁ … κ_{n−1}`; the last one carries the orientation sign.
    pub kappa: Vec<DVector<f64>>,
    pub defined: Vec<usize>,
    pub regular_order: usize,
    pub failure: Option<RegularityFailure>,
}

impl FrenetData {
    pub fn dim(&self) -> usize {
        self.v[0].nrows()
    }

    /// Antisymmetric tridiagonal curvature matrix at sample `i`.
    pub fn curvature_matrix(&self, i: usize) -> DMatrix<f64> {
        curvature_matrix(&self.kappa[i])
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    /// Largest recursion residual `‖D v_j + κ_{j−1}v_{j−1} − κ_j v_{j+1}‖`
    /// over the interior samples (two at each end are skipped).
    pub fn recursion_residual(&self, m: &dyn Manifold, c: &SampledCurve) -> Result<f64> {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            let col: Vec<DVector<f64>> = self.v.iter().map(|v| v.column(j).clone_owned()).collect();
            let d = covariant_derivative(m, c, &col)?;
            for i in 2..c.len().saturating_sub(2) {
                let mut r = d[i].clone();
                if j > 0 {
                    r += self.v[i].column(j - 1) * self.kappa[i][j - 1];
                }
                if j + 1 < n {
                    r -= self.v[i].column(j + 1) * self.kappa[i][j];
                }
                if r.iter().all(|x| x.is_finite()) {
                    worst = worst.max(r.norm());
                }
            }
        }
        Ok(worst)
    }
}

/// `K` with `−κ_j` above and `+κ_j` below the diagonal, so that `V̇ = VK`
/// for a Frenet frame `V` in a parallel basis.
pub fn curvature_matrix(kappa: &DVector<f64>) -> DMatrix<f64> {
    let n = kappa.len() + 1;
    let mut k = DMatrix::zeros(n, n);
    for j in 0..n - 1 {
        k[(j, j + 1)] = -kappa[j];
        k[(j + 1, j)] = kappa[j];
    }
    k
}

fn require_unit_speed(m: &dyn Manifold, c: &SampledCurve) -> Result<()> {
    if c.arc_length {
        return Ok(());
    }
    let worst = c.speeds(m).iter().map(|s| (s - 1.0).abs()).fold(0.0f64, f64::max);
    if worst > UNIT_SPEED_TOL {
        return Err(Error::NotUnitSpeed(worst));
    }
    Ok(())
}

/// Frenet frame and geodesic curvatures of a unit-speed curve.
///
/// `v₂ … v_{n−1}` come from the recursion with Gram–Schmidt clean-up, `vₙ`
/// completes the frame to a positively oriented basis, and `κ_{n−1}` is
/// signed. A curvature `κ_j < ε_reg` for `j ≤ n−2` stops the recursion:
/// the data up to that order is still returned with `failure` set.
pub fn frenet_apparatus(m: &dyn Manifold, c: &SampledCurve, eps_reg: f64) -> Result<FrenetData> {
    c.check_inside(m)?;
    require_unit_speed(m, c)?;
    let n = m.dim();
    let len = c.len();
    if len < 5 {
        return Err(Error::GridTooShort { got: len, need: 5 });
    }
    let nan_vec = || DVector::from_element(n, f64::NAN);
    let mut fields: Vec<Vec<DVector<f64>>> = Vec::with_capacity(n);
    let mut kappa = vec![DVector::from_element(n - 1, f64::NAN); len];
    let mut failure = None;

    let v1: Vec<DVector<f64>> = (0..len)
        .map(|i| {
            let u = m.to_frame(&c.xi[i], &c.dxi[i]);
            let s = u.norm();
            if s > 0.0 {
                u / s
            } else {
                nan_vec()
            }
        })
        .collect();
    fields.push(v1);

    // v_{j+1} from D v_j + κ_{j−1} v_{j−1} for j = 1 .. n−2 (1-based)
    for j in 0..n.saturating_sub(2) {
        let d = covariant_derivative(m, c, &fields[j])?;
        let mut next = Vec::with_capacity(len);
        for i in 0..len {
            let mut w = d[i].clone();
            if j > 0 {
                w += &fields[j - 1][i] * kappa[i][j - 1];
            }
            let k = w.norm();
            if !(k >= eps_reg) {
                if failure.is_none() && k.is_finite() {
                    failure = Some(RegularityFailure { index: j + 1, t: c.t[i] });
                }
                next.push(nan_vec());
                continue;
            }
            kappa[i][j] = k;
            let mut v = w / k;
            for prev in &fields {
                let p = prev[i].dot(&v);
                v.axpy(-p, &prev[i], 1.0);
            }
            let norm = v.norm();
            next.push(v / norm);
        }
        fields.push(next);
    }

    // top field by oriented completion, then the signed curvature
    let mut v = Vec::with_capacity(len);
    let mut top = Vec::with_capacity(len);
    for i in 0..len {
        let mut block = DMatrix::from_element(n, n, f64::NAN);
        for (j, f) in fields.iter().enumerate() {
            block.set_column(j, &f[i]);
        }
        if fields.iter().all(|f| f[i].iter().all(|x| x.is_finite())) {
            let vn = complete_oriented_basis(&block.columns(0, n - 1).clone_owned());
            block.set_column(n - 1, &vn);
            top.push(vn);
        } else {
            top.push(nan_vec());
        }
        v.push(block);
    }
    if n >= 2 {
        let prev: Vec<DVector<f64>> = fields[n - 2].clone();
        let d = covariant_derivative(m, c, &prev)?;
        for i in 0..len {
            let mut w = d[i].clone();
            if n >= 3 {
                w += &fields[n - 3][i] * kappa[i][n - 3];
            }
            kappa[i][n - 2] = top[i].dot(&w);
        }
    }

    let defined = (0..len)
        .map(|i| (0..n).take_while(|&j| v[i].column(j).iter().all(|x| x.is_finite())).count())
        .collect();
    let regular_order = regularity_order(m, c, eps_reg)?.order;
    Ok(FrenetData {
        t: c.t.clone(),
        v,
        kappa,
        defined,
        regular_order,
        failure,
    })
}

/// Outcome of the regularity test.
#[derive(Debug, Clone)]
pub struct RegularityReport {
    /// Largest `k` with `{ẋ, Dẋ, …, Dᵏẋ}` independent at every tested sample,
    /// floored at 1 for curves whose velocity never vanishes.
    pub order: usize,
    /// Samples where the next set `{ẋ, …, D^{order+1}ẋ}` is dependent.
    pub failures: Vec<f64>,
}

impl RegularityReport {
    /// Failure sample closest to `t`, if any.
    pub fn nearest_failure(&self, t: f64) -> Option<f64> {
        self.failures.iter().copied().min_by(|a, b| (a - t).abs().total_cmp(&(b - t).abs()))
    }
}

fn rank_ok(cols: &[&DVector<f64>], eps: f64) -> bool {
    let n = cols[0].len();
    if cols.len() > n {
        return false;
    }
    let mut a = DMatrix::zeros(n, cols.len());
    for (j, c) in cols.iter().enumerate() {
        a.set_column(j, c);
    }
    let sv = a.singular_values();
    let max = sv.max();
    max > 0.0 && sv.min() > eps * max
}

/// Regularity order on the interior samples of `c` (two at each end are skipped).
pub fn regularity_order(m: &dyn Manifold, c: &SampledCurve, eps_reg: f64) -> Result<RegularityReport> {
    c.check_inside(m)?;
    let n = m.dim();
    let len = c.len();
    if len < 5 {
        return Err(Error::GridTooShort { got: len, need: 5 });
    }
    let interior: Vec<usize> = (2..len - 2).collect();
    let mut derivs = vec![(0..len).map(|i| m.to_frame(&c.xi[i], &c.dxi[i])).collect::<Vec<_>>()];
    let speed_fail: Vec<f64> = interior
        .iter()
        .filter(|&&i| derivs[0][i].norm() < EPS_SPEED)
        .map(|&i| c.t[i])
        .collect();
    if !speed_fail.is_empty() {
        return Ok(RegularityReport {
            order: 0,
            failures: speed_fail,
        });
    }
    let mut order = 0;
    let mut failures = Vec::new();
    for k in 1..=n {
        let next = covariant_derivative(m, c, derivs.last().unwrap())?;
        derivs.push(next);
        failures = interior
            .iter()
            .filter(|&&i| {
                let cols: Vec<&DVector<f64>> = derivs.iter().map(|d| &d[i]).collect();
                !rank_ok(&cols, eps_reg)
            })
            .map(|&i| c.t[i])
            .collect();
        if !failures.is_empty() {
            break;
        }
        order = k;
    }
    Ok(RegularityReport {
        order: order.max(1),
        failures,
    })
}

/// Reparametrizes by arc length on `samples` uniform points (the source
/// sample count by default).
///
/// Lengths come from five-point Gauss–Legendre per source interval; each new
/// sample is located by Newton iteration on the partial length.
pub fn reparametrize_arclength(m: &dyn Manifold, c: &SampledCurve, samples: Option<usize>) -> Result<SampledCurve> {
    c.check_inside(m)?;
    let speed = |t: f64| {
        let (x, d) = c.eval(t);
        m.to_frame(&x, &d).norm()
    };
    for (i, s) in c.speeds(m).iter().enumerate() {
        if !(*s >= EPS_SPEED) {
            return Err(Error::VanishingSpeed { t: c.t[i], speed: *s });
        }
    }
    let mut cum = vec![0.0];
    for w in c.t.windows(2) {
        let piece = gauss5(w[0], w[1], speed);
        cum.push(cum.last().unwrap() + piece);
    }
    let total = *cum.last().unwrap();
    let samples = samples.unwrap_or(c.len()).max(2);
    let s_grid = uniform_grid(0.0, total, samples - 1);
    let mut xi = Vec::with_capacity(samples);
    let mut dxi = Vec::with_capacity(samples);
    for &s in &s_grid {
        let i = match cum.binary_search_by(|v| v.total_cmp(&s)) {
            Ok(i) => i.min(c.len() - 2),
            Err(i) => (i - 1).min(c.len() - 2),
        };
        let (a, b) = (c.t[i], c.t[i + 1]);
        let target = s - cum[i];
        let piece = cum[i + 1] - cum[i];
        let mut t = a + (b - a) * (target / piece).clamp(0.0, 1.0);
        for _ in 0..50 {
            let f = gauss5(a, t, speed) - target;
            let step = f / speed(t);
            t = (t - step).clamp(a, b);
            if step.abs() < 1e-15 * (1.0 + t.abs()) {
                break;
            }
        }
        let (x, d) = c.eval(t);
        let v = m.to_frame(&x, &d).norm();
        xi.push(x);
        dxi.push(d / v);
    }
    let closed = c.closed;
    Ok(SampledCurve::new(s_grid, xi, dxi)?.with_flags(true, closed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::builtin_curve;
    use crate::geometry::{Euclidean, Params, SphereStereo};
    use crate::integrate::IntegratorOptions;
    use crate::transport::parallel_transport;
    use std::f64::consts::PI;

    fn params(kv: &[(&str, f64)]) -> Params {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn parallel_field_has_zero_derivative() {
        let s = SphereStereo::new(2);
        let c = builtin_curve("latitude", &params(&[("colat", 1.0), ("points", 801.0)])).unwrap();
        let (_, w) = parallel_transport(&s, &c, &DVector::from_vec(vec![0.6, 0.8]), &IntegratorOptions::steps(800)).unwrap();
        let d = covariant_derivative(&s, &c, &w).unwrap();
        assert!(d.iter().all(|v| v.norm() < 1e-6));
    }

    #[test]
    fn latitude_acceleration_is_cot() {
        let s = SphereStereo::new(2);
        let theta = 0.9;
        let c = builtin_curve("latitude", &params(&[("colat", theta)])).unwrap();
        let u: Vec<DVector<f64>> = (0..c.len()).map(|i| s.to_frame(&c.xi[i], &c.dxi[i])).collect();
        let d = covariant_derivative(&s, &c, &u).unwrap();
        for v in &d[2..d.len() - 2] {
            assert!((v.norm() - 1.0 / theta.tan()).abs() < 1e-8);
        }
    }

    #[test]
    fn circle_curvature_and_inward_normal() {
        let e = Euclidean { n: 2 };
        let c = builtin_curve("circle", &params(&[("r", 2.0)])).unwrap();
        let f = frenet_apparatus(&e, &c, EPS_REG).unwrap();
        assert!(f.is_complete());
        for i in 2..c.len() - 2 {
            assert!((f.kappa[i][0] - 0.5).abs() < 1e-8);
            let inward = -&c.xi[i] / 2.0;
            assert!((f.v[i].column(1) - inward).norm() < 1e-12);
        }
    }

    #[test]
    fn helix_curvatures() {
        let e = Euclidean { n: 3 };
        let c = builtin_curve("helix", &params(&[("kappa", 1.0), ("tau", 0.5), ("points", 2001.0)])).unwrap();
        let f = frenet_apparatus(&e, &c, EPS_REG).unwrap();
        for i in 2..c.len() - 2 {
            assert!((f.kappa[i][0] - 1.0).abs() < 1e-5);
            assert!((f.kappa[i][1] - 0.5).abs() < 1e-5);
            assert!((f.v[i].determinant() - 1.0).abs() < 1e-10);
        }
        assert!(f.recursion_residual(&e, &c).unwrap() < 1e-5);
        assert_eq!(f.regular_order, 2);
    }

    #[test]
    fn line_is_order_one() {
        let e = Euclidean { n: 3 };
        let c = builtin_curve("line", &params(&[("n", 3.0)])).unwrap();
        let f = frenet_apparatus(&e, &c, EPS_REG).unwrap();
        assert_eq!(f.regular_order, 1);
        assert_eq!(f.failure.map(|x| x.index), Some(1));
        assert!(f.v[10].column(1)[0].is_nan());
        assert_eq!(f.defined[10], 1);
    }

    #[test]
    fn curvature_matrix_shape() {
        let k = curvature_matrix(&DVector::from_vec(vec![1.0, -2.0]));
        assert_eq!(k, DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 2.0, 0.0, -2.0, 0.0]));
    }

    #[test]
    fn doubled_speed_circle() {
        let e = Euclidean { n: 2 };
        let c = builtin_curve("circle", &params(&[("points", 401.0)])).unwrap();
        let t: Vec<f64> = c.t.iter().map(|s| s / 2.0).collect();
        let dxi: Vec<DVector<f64>> = c.dxi.iter().map(|d| d * 2.0).collect();
        let fast = SampledCurve::new(t, c.xi.clone(), dxi).unwrap();
        assert!(matches!(frenet_apparatus(&e, &fast, EPS_REG), Err(Error::NotUnitSpeed(_))));
        let r = reparametrize_arclength(&e, &fast, None).unwrap();
        assert!((r.t1() - 2.0 * PI).abs() < 1e-8);
        assert!(r.speeds(&e).iter().all(|s| (s - 1.0).abs() < 1e-12));
        assert!((&r.xi[100] - &c.xi[100]).norm() < 1e-8);
    }

    #[test]
    fn vanishing_speed_is_refused() {
        let e = Euclidean { n: 1 };
        let t: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let xi = t.iter().map(|s| DVector::from_element(1, s * s)).collect();
        let dxi = t.iter().map(|s| DVector::from_element(1, 2.0 * s)).collect();
        let c = SampledCurve::new(t, xi, dxi).unwrap();
        assert!(matches!(
            reparametrize_arclength(&e, &c, None),
            Err(Error::VanishingSpeed { .. })
        ));
    }
}
