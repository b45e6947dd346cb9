//! Sampled curves in chart coordinates.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::{parse_params, Manifold, Params, SphereStereo};
use crate::linalg::{differentiate, gauss5};

/// Exact evaluation `t ↦ (ξ(t), ξ̇(t))` attached to analytically defined curves.
pub type CurveFn = Arc<dyn Fn(f64) -> (DVector<f64>, DVector<f64>) + Send + Sync>;

/// A curve sampled on a strictly increasing parameter grid.
///
/// Between samples the curve is evaluated exactly when an analytic
/// evaluator is attached, and by cubic Hermite interpolation otherwise.
#[derive(Clone)]
pub struct SampledCurve {
    pub t: Vec<f64>,
    pub xi: Vec<DVector<f64>>,
    pub dxi: Vec<DVector<f64>>,
    pub arc_length: bool,
    pub closed: bool,
    eval: Option<CurveFn>,
}

impl fmt::Debug for SampledCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledCurve")
            .field("samples", &self.t.len())
            .field("span", &(self.t.first(), self.t.last()))
            .field("arc_length", &self.arc_length)
            .field("closed", &self.closed)
            .field("analytic", &self.eval.is_some())
            .finish()
    }
}

impl SampledCurve {
    pub fn new(t: Vec<f64>, xi: Vec<DVector<f64>>, dxi: Vec<DVector<f64>>) -> Result<Self> {
        if t.len() < 2 {
            return Err(Error::GridTooShort { got: t.len(), need: 2 });
        }
        if xi.len() != t.len() || dxi.len() != t.len() {
            return Err(Error::Mismatch(format!(
                "{} times, {} points, {} derivatives",
                t.len(),
                xi.len(),
                dxi.len()
            )));
        }
        if let Some(i) = t.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::GridNotIncreasing(i + 1));
        }
        let dim = xi[0].len();
        if xi.iter().chain(&dxi).any(|v| v.len() != dim) {
            return Err(Error::InvalidDimension("inconsistent sample dimensions".into()));
        }
        Ok(Self {
            t,
            xi,
            dxi,
            arc_length: false,
            closed: false,
            eval: None,
        })
    }

    /// Samples without derivatives; derivatives are finite-differenced.
    pub fn from_points(t: Vec<f64>, xi: Vec<DVector<f64>>) -> Result<Self> {
        let dxi = differentiate(&t, &xi)?;
        Self::new(t, xi, dxi)
    }

    /// Samples an analytic curve on `samples` uniform points of `[t0, t1]`.
    pub fn analytic(t0: f64, t1: f64, samples: usize, f: CurveFn) -> Result<Self> {
        if samples < 2 {
            return Err(Error::GridTooShort { got: samples, need: 2 });
        }
        let t = uniform_grid(t0, t1, samples - 1);
        let (xi, dxi): (Vec<_>, Vec<_>) = t.iter().map(|s| f(*s)).unzip();
        let mut c = Self::new(t, xi, dxi)?;
        c.eval = Some(f);
        Ok(c)
    }

    pub fn with_flags(mut self, arc_length: bool, closed: bool) -> Self {
        self.arc_length = arc_length;
        self.closed = closed;
        self
    }

    pub fn is_analytic(&self) -> bool {
        self.eval.is_some()
    }

    pub fn evaluator(&self) -> Option<CurveFn> {
        self.eval.clone()
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn coord_dim(&self) -> usize {
        self.xi[0].len()
    }

    pub fn t0(&self) -> f64 {
        self.t[0]
    }

    pub fn t1(&self) -> f64 {
        *self.t.last().unwrap()
    }

    pub fn span(&self) -> f64 {
        self.t1() - self.t0()
    }

    /// Position and velocity at parameter `s` (clamped to the grid).
    pub fn eval(&self, s: f64) -> (DVector<f64>, DVector<f64>) {
        if let Some(f) = &self.eval {
            return f(s);
        }
        let s = s.clamp(self.t0(), self.t1());
        let i = match self.t.binary_search_by(|v| v.total_cmp(&s)) {
            Ok(i) => return (self.xi[i].clone(), self.dxi[i].clone()),
            Err(i) => i - 1,
        };
        let h = self.t[i + 1] - self.t[i];
        let u = (s - self.t[i]) / h;
        let (u2, u3) = (u * u, u * u * u);
        let (p0, p1) = (&self.xi[i], &self.xi[i + 1]);
        let (m0, m1) = (&self.dxi[i] * h, &self.dxi[i + 1] * h);
        let x = p0 * (2.0 * u3 - 3.0 * u2 + 1.0)
            + &m0 * (u3 - 2.0 * u2 + u)
            + p1 * (-2.0 * u3 + 3.0 * u2)
            + &m1 * (u3 - u2);
        let dx = (p0 * (6.0 * u2 - 6.0 * u) + &m0 * (3.0 * u2 - 4.0 * u + 1.0)
            + p1 * (-6.0 * u2 + 6.0 * u)
            + &m1 * (3.0 * u2 - 2.0 * u))
            / h;
        (x, dx)
    }

    /// Resamples on `steps + 1` uniform points, keeping the evaluator.
    pub fn resample(&self, steps: usize) -> Result<Self> {
        let t = uniform_grid(self.t0(), self.t1(), steps);
        let (xi, dxi): (Vec<_>, Vec<_>) = t.iter().map(|s| self.eval(*s)).unzip();
        let mut c = Self::new(t, xi, dxi)?;
        c.eval = self.eval.clone();
        c.arc_length = self.arc_length;
        c.closed = self.closed;
        Ok(c)
    }

    /// Speeds `|ξ̇|` measured in the frame of `m`.
    pub fn speeds(&self, m: &dyn Manifold) -> Vec<f64> {
        self.xi
            .iter()
            .zip(&self.dxi)
            .map(|(x, d)| m.to_frame(x, d).norm())
            .collect()
    }

    /// Riemannian length by five-point Gauss–Legendre per grid interval.
    pub fn length(&self, m: &dyn Manifold) -> f64 {
        self.t
            .windows(2)
            .map(|w| {
                gauss5(w[0], w[1], |s| {
                    let (x, d) = self.eval(s);
                    m.to_frame(&x, &d).norm()
                })
            })
            .sum()
    }

    pub fn endpoint_gap(&self) -> f64 {
        (&self.xi[0] - self.xi.last().unwrap()).norm()
    }

    /// Fails unless all samples lie in the chart of `m`.
    pub fn check_inside(&self, m: &dyn Manifold) -> Result<()> {
        if self.coord_dim() != m.coord_dim() {
            return Err(Error::InvalidDimension(format!(
                "curve has {} coordinates, {} expects {}",
                self.coord_dim(),
                m.name(),
                m.coord_dim()
            )));
        }
        for x in &self.xi {
            crate::geometry::ensure_inside(m, x)?;
        }
        Ok(())
    }

    /// Same curve run backwards on the mirrored grid.
    pub fn reversed(&self) -> Self {
        let (a, b) = (self.t0(), self.t1());
        let t = self.t.iter().rev().map(|s| a + b - s).collect();
        let xi = self.xi.iter().rev().cloned().collect();
        let dxi = self.dxi.iter().rev().map(|d| -d).collect();
        let eval = self.eval.clone().map(|f| -> CurveFn {
            Arc::new(move |s| {
                let (x, d) = f(a + b - s);
                (x, -d)
            })
        });
        Self {
            t,
            xi,
            dxi,
            arc_length: self.arc_length,
            closed: self.closed,
            eval,
        }
    }

    /// Sub-curve on `[a, b]` resampled with `steps` intervals.
    pub fn restrict(&self, a: f64, b: f64, steps: usize) -> Result<Self> {
        if !(a < b) || a < self.t0() - 1e-12 || b > self.t1() + 1e-12 {
            return Err(Error::InvalidParameter(format!("[{a}, {b}] not inside the curve span")));
        }
        let t = uniform_grid(a, b, steps);
        let (xi, dxi): (Vec<_>, Vec<_>) = t.iter().map(|s| self.eval(*s)).unzip();
        let mut c = Self::new(t, xi, dxi)?;
        c.eval = self.eval.clone();
        c.arc_length = self.arc_length;
        Ok(c)
    }

    /// Writes `t, xi_1..xi_m, dxi_1..dxi_m`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let m = self.coord_dim();
        let mut out = String::from("t");
        for i in 1..=m {
            out.push_str(&format!(",xi_{i}"));
        }
        for i in 1..=m {
            out.push_str(&format!(",dxi_{i}"));
        }
        out.push('\n');
        for k in 0..self.len() {
            out.push_str(&format!("{}", self.t[k]));
            for v in self.xi[k].iter().chain(self.dxi[k].iter()) {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Reads `t, xi_1..xi_m[, dxi_1..dxi_m]`; missing derivatives are finite-differenced.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let (header, rows) = parse_csv(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if header.first().map(String::as_str) != Some("t") {
            return Err(Error::Parse(format!("{}: first column must be `t`", path.display())));
        }
        let m = header.iter().filter(|h| h.starts_with("xi_")).count();
        let d = header.iter().filter(|h| h.starts_with("dxi_")).count();
        if m == 0 || (d != 0 && d != m) || header.len() != 1 + m + d {
            return Err(Error::Parse(format!("{}: bad curve header", path.display())));
        }
        let t: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let xi: Vec<DVector<f64>> = rows.iter().map(|r| DVector::from_column_slice(&r[1..1 + m])).collect();
        let mut c = if d == m {
            let dxi = rows.iter().map(|r| DVector::from_column_slice(&r[1 + m..])).collect();
            Self::new(t, xi, dxi)?
        } else {
            Self::from_points(t, xi)?
        };
        c.closed = c.endpoint_gap() < 1e-9;
        Ok(c)
    }
}

/// `steps + 1` evenly spaced values from `a` to `b`, endpoints exact.
pub fn uniform_grid(a: f64, b: f64, steps: usize) -> Vec<f64> {
    let h = (b - a) / steps as f64;
    (0..=steps)
        .map(|i| if i == steps { b } else { a + h * i as f64 })
        .collect()
}

pub(crate) fn parse_csv(text: &str) -> std::result::Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or("empty file")?
        .split(',')
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| format!("row {}: {e}", i + 2))?;
        if row.len() != header.len() {
            return Err(format!("row {} has {} fields, header has {}", i + 2, row.len(), header.len()));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

fn vec2(a: f64, b: f64) -> DVector<f64> {
    DVector::from_vec(vec![a, b])
}

fn get(params: &Params, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

/// `e^{-1/t²}` and its derivative, zero at the origin.
fn bump(t: f64) -> (f64, f64) {
    if t.abs() < 1e-3 {
        return (0.0, 0.0);
    }
    let e = (-1.0 / (t * t)).exp();
    (e, 2.0 * e / (t * t * t))
}

/// The two curves of the one-point counterexample on `t ∈ [−1, 1]`:
/// `(t, e^{-1/t²}, 0)` and its partner that switches the bump into the
/// third coordinate for `t > 0`.
pub fn exonepoint_pair(samples: usize) -> Result<(SampledCurve, SampledCurve)> {
    let y: CurveFn = Arc::new(|t| {
        let (e, de) = bump(t);
        (DVector::from_vec(vec![t, e, 0.0]), DVector::from_vec(vec![1.0, de, 0.0]))
    });
    let y_hat: CurveFn = Arc::new(|t| {
        let (e, de) = bump(t);
        if t > 0.0 {
            (DVector::from_vec(vec![t, 0.0, e]), DVector::from_vec(vec![1.0, 0.0, de]))
        } else {
            (DVector::from_vec(vec![t, e, 0.0]), DVector::from_vec(vec![1.0, de, 0.0]))
        }
    });
    Ok((
        SampledCurve::analytic(-1.0, 1.0, samples, y)?,
        SampledCurve::analytic(-1.0, 1.0, samples, y_hat)?,
    ))
}

/// Fresnel-type integrals `(∫₀ˢ cos(σ²/2), ∫₀ˢ sin(σ²/2))` by composite Gauss–Legendre.
fn clothoid_point(s: f64) -> (f64, f64) {
    let pieces = ((s.abs() * 16.0).ceil() as usize).max(1);
    let h = s / pieces as f64;
    let mut x = 0.0;
    let mut y = 0.0;
    for i in 0..pieces {
        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
        x += gauss5(a, b, |v| (0.5 * v * v).cos());
        y += gauss5(a, b, |v| (0.5 * v * v).sin());
    }
    (x, y)
}

/// Analytic test curves, all unit speed in the metric they are meant for.
///
/// | family        | manifold            | parameters (defaults)               |
/// |---------------|---------------------|-------------------------------------|
/// | `line`        | euclidean n         | `n` (3), `len` (1)                  |
/// | `circle`      | euclidean 2         | `r` (1), `len` (2πr), `cx`, `cy`    |
/// | `latitude`    | sphere_stereo 2     | `colat` (π/3), `turns` (1)          |
/// | `greatcircle` | sphere_stereo n     | `n` (2), `len` (π/2)                |
/// | `helix`       | euclidean 3         | `kappa` (1), `tau` (0.5), `len` (2π)|
/// | `clothoid`    | euclidean 2         | `len` (2)                           |
/// | `ellipse`     | euclidean 2         | `a` (2), `b` (1); not unit speed    |
/// | `stadium`     | euclidean 2         | `r` (1), `l` (2)                    |
/// | `exonepoint_pair` | euclidean 3     | `branch` (0 or 1)                   |
///
/// `points` sets the number of samples (default 1001).
pub fn builtin_curve(family: &str, params: &Params) -> Result<SampledCurve> {
    let samples = get(params, "points", 1001.0) as usize;
    match family {
        "line" => {
            let n = get(params, "n", 3.0) as usize;
            let len = get(params, "len", 1.0);
            if n == 0 {
                return Err(Error::InvalidDimension("line needs n >= 1".into()));
            }
            let f: CurveFn = Arc::new(move |s| {
                let mut x = DVector::zeros(n);
                let mut d = DVector::zeros(n);
                x[0] = s;
                d[0] = 1.0;
                (x, d)
            });
            Ok(SampledCurve::analytic(0.0, len, samples, f)?.with_flags(true, false))
        }
        "circle" => {
            let r = get(params, "r", 1.0);
            if !(r > 0.0) {
                return Err(Error::InvalidParameter("circle radius must be positive".into()));
            }
            let len = get(params, "len", 2.0 * PI * r);
            let (cx, cy) = (get(params, "cx", 0.0), get(params, "cy", 0.0));
            let f: CurveFn = Arc::new(move |s| {
                let a = s / r;
                (vec2(cx + r * a.cos(), cy + r * a.sin()), vec2(-a.sin(), a.cos()))
            });
            let closed = ((len / (2.0 * PI * r)).round() - len / (2.0 * PI * r)).abs() < 1e-12;
            Ok(SampledCurve::analytic(0.0, len, samples, f)?.with_flags(true, closed))
        }
        "latitude" => {
            let colat = get(params, "colat", PI / 3.0);
            let turns = get(params, "turns", 1.0);
            if !(colat > 0.0 && colat < PI) {
                return Err(Error::InvalidParameter("colatitude must lie in (0, π)".into()));
            }
            let rho = (0.5 * colat).tan();
            let radius = colat.sin();
            let len = 2.0 * PI * radius * turns;
            // |ξ| = tan(θ/2); chart speed ρ/sinθ gives unit Riemannian speed
            let f: CurveFn = Arc::new(move |s| {
                let a = s / radius;
                (
                    vec2(rho * a.cos(), rho * a.sin()),
                    vec2(-a.sin(), a.cos()) * (rho / radius),
                )
            });
            let closed = (turns.round() - turns).abs() < 1e-12;
            Ok(SampledCurve::analytic(0.0, len, samples, f)?.with_flags(true, closed))
        }
        "greatcircle" => {
            let n = get(params, "n", 2.0) as usize;
            let len = get(params, "len", PI / 2.0);
            if n == 0 {
                return Err(Error::InvalidDimension("greatcircle needs n >= 1".into()));
            }
            let f: CurveFn = Arc::new(move |s| {
                let mut x = DVector::zeros(n);
                let mut d = DVector::zeros(n);
                let c = (0.5 * s).tan();
                x[0] = c;
                d[0] = 0.5 * (1.0 + c * c);
                (x, d)
            });
            Ok(SampledCurve::analytic(0.0, len, samples, f)?.with_flags(true, false))
        }
        "helix" => {
            let kappa = get(params, "kappa", 1.0);
            let tau = get(params, "tau", 0.5);
            let len = get(params, "len", 2.0 * PI);
            let denom = kappa * kappa + tau * tau;
            if !(denom > 0.0) {
                return Err(Error::InvalidParameter("helix needs kappa or tau nonzero".into()));
            }
            let (a, b) = (kappa / denom, tau / denom);
            let c = (a * a + b * b).sqrt();
            let f: CurveFn = Arc::new(move |s| {
                let w = s / c;
                (
                    DVector::from_vec(vec![a * w.cos(), a * w.sin(), b * w]),
                    DVector::from_vec(vec![-a * w.sin() / c, a * w.cos() / c, b / c]),
                )
            });
            Ok(SampledCurve::analytic(0.0, len, samples, f)?.with_flags(true, false))
        }
        "clothoid" => {
            let len = get(params, "len", 2.0);
            let f: CurveFn = Arc::new(|s| {
                let (x, y) = clothoid_point(s);
                (vec2(x, y), vec2((0.5 * s * s).cos(), (0.5 * s * s).sin()))
            });
            Ok(SampledCurve::analytic(0.0, len, samples, f)?.with_flags(true, false))
        }
        "ellipse" => {
            let (a, b) = (get(params, "a", 2.0), get(params, "b", 1.0));
            let f: CurveFn = Arc::new(move |s| (vec2(a * s.cos(), b * s.sin()), vec2(-a * s.sin(), b * s.cos())));
            Ok(SampledCurve::analytic(0.0, 2.0 * PI, samples, f)?.with_flags(false, true))
        }
        "stadium" => {
            // half circle followed by a straight return: curvature jumps at the joints
            let r = get(params, "r", 1.0);
            let l = get(params, "l", 2.0);
            let arc = PI * r;
            let total = arc + l + arc + l;
            let f: CurveFn = Arc::new(move |s| {
                let s = s.clamp(0.0, total);
                if s < arc {
                    let a = -0.5 * PI + s / r;
                    (vec2(l / 2.0 + r * a.cos(), r * a.sin()), vec2(-a.sin(), a.cos()))
                } else if s < arc + l {
                    let u = s - arc;
                    (vec2(l / 2.0 - u, r), vec2(-1.0, 0.0))
                } else if s < 2.0 * arc + l {
                    let a = 0.5 * PI + (s - arc - l) / r;
                    (vec2(-l / 2.0 + r * a.cos(), r * a.sin()), vec2(-a.sin(), a.cos()))
                } else {
                    let u = s - 2.0 * arc - l;
                    (vec2(-l / 2.0 + u, -r), vec2(1.0, 0.0))
                }
            });
            Ok(SampledCurve::analytic(0.0, total, samples, f)?.with_flags(true, true))
        }
        "exonepoint_pair" | "exonepoint" => {
            let (y, y_hat) = exonepoint_pair(samples)?;
            match get(params, "branch", 0.0) as i64 {
                0 => Ok(y),
                1 => Ok(y_hat),
                b => Err(Error::InvalidParameter(format!("exonepoint branch {b}; use 0 or 1"))),
            }
        }
        other => Err(Error::UnknownCurve(other.to_string())),
    }
}

/// Resolves a curve argument: a CSV path or `family[:key=value,...]`.
pub fn curve_from_spec(spec: &str) -> Result<SampledCurve> {
    let path = Path::new(spec);
    if path.extension().is_some_and(|e| e == "csv") || path.is_file() {
        return SampledCurve::read_csv(path);
    }
    let (family, rest) = spec.split_once(':').unwrap_or((spec, ""));
    builtin_curve(family.trim(), &parse_params(rest)?)
}

/// Applies an ambient rotation to a curve on the stereographic sphere.
pub fn rotate_sphere_curve(c: &SampledCurve, rotation: &nalgebra::DMatrix<f64>) -> Result<SampledCurve> {
    let rot = rotation.clone();
    let src = c.clone();
    let f: CurveFn = Arc::new(move |s| {
        let (x, d) = src.eval(s);
        // push the embedded velocity through the rotation and back through the chart
        let r = SphereStereo::embedded_from_chart(&x);
        let ssq = x.norm_squared();
        let dot = x.dot(&d);
        let mut dr = DVector::zeros(r.len());
        dr[0] = -4.0 * dot / ((1.0 + ssq) * (1.0 + ssq));
        for i in 0..x.len() {
            dr[i + 1] = 2.0 * d[i] / (1.0 + ssq) - 4.0 * x[i] * dot / ((1.0 + ssq) * (1.0 + ssq));
        }
        let rr = &rot * r;
        let drr = &rot * dr;
        let xi = SphereStereo::chart_from_embedded(&rr);
        let denom = 1.0 + rr[0];
        let dxi = DVector::from_iterator(xi.len(), (0..xi.len()).map(|i| drr[i + 1] / denom - rr[i + 1] * drr[0] / (denom * denom)));
        (xi, dxi)
    });
    Ok(SampledCurve::analytic(c.t0(), c.t1(), c.len(), f)?.with_flags(c.arc_length, c.closed))
}
