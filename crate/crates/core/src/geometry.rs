//! Chart-based manifold models.
//!
//! A model exposes, at every chart point `ξ`, an orthonormal frame
//! `e_j = Σ_i φ_ij ∂_i` and the frame Christoffel matrices
//! `(Γ_k)_ij = ⟨e_i, ∇_{e_k} e_j⟩`. Tangent vectors are carried around in
//! frame components `u = φ⁻¹ · v` so that the Riemannian inner product is the
//! Euclidean one.
//!
//! The SU(2) model is the one exception to square frames: its chart is the
//! unit quaternion itself (four coordinates) and `φ` is the 4×3 matrix of the
//! left-invariant fields `X₁, X₂, X₃`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::max_abs;

pub type Point = DVector<f64>;

/// A Riemannian manifold described in one fixed chart.
pub trait Manifold: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    /// Intrinsic dimension `n`.
    fn dim(&self) -> usize;

    /// Number of chart coordinates; equals `dim()` except for embedded models.
    fn coord_dim(&self) -> usize {
        self.dim()
    }

    /// `coord_dim × dim` matrix whose columns are the frame fields in chart components.
    fn frame(&self, xi: &Point) -> DMatrix<f64>;

    /// The `n` antisymmetric matrices `Γ_k`.
    fn christoffel(&self, xi: &Point) -> Vec<DMatrix<f64>>;

    fn contains(&self, xi: &Point) -> bool;

    /// Pulls a point back onto the model after an integration step.
    fn project(&self, _xi: &mut Point) {}

    /// Chart vector → frame components.
    fn to_frame(&self, xi: &Point, v: &DVector<f64>) -> DVector<f64> {
        let phi = self.frame(xi);
        if phi.is_square() {
            phi.lu().solve(v).unwrap_or_else(|| DVector::from_element(v.len(), f64::NAN))
        } else {
            phi.transpose() * v
        }
    }

    /// Frame components → chart vector.
    fn from_frame(&self, xi: &Point, u: &DVector<f64>) -> DVector<f64> {
        self.frame(xi) * u
    }

    /// Unit normal of an embedded chart, used to orient non-square frames.
    fn normal(&self, _xi: &Point) -> Option<DVector<f64>> {
        None
    }

    /// `Σ_k u_k Γ_k(ξ)`.
    fn connection(&self, xi: &Point, u: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        for (k, g) in self.christoffel(xi).iter().enumerate() {
            if u[k] != 0.0 {
                out += g * u[k];
            }
        }
        out
    }
}

pub type ManifoldRef = Arc<dyn Manifold>;

/// Fails with [`Error::OutsideChart`] unless `xi` is a valid chart point.
pub fn ensure_inside(m: &dyn Manifold, xi: &Point) -> Result<()> {
    if xi.len() != m.coord_dim() {
        return Err(Error::InvalidDimension(format!(
            "{} expects {} chart coordinates, got {}",
            m.name(),
            m.coord_dim(),
            xi.len()
        )));
    }
    if m.contains(xi) {
        Ok(())
    } else {
        Err(Error::OutsideChart {
            manifold: m.name(),
            point: xi.iter().copied().collect(),
        })
    }
}

/// Riemannian inner product of two chart vectors at `xi`.
pub fn inner_product(m: &dyn Manifold, xi: &Point, v: &DVector<f64>, w: &DVector<f64>) -> Result<f64> {
    ensure_inside(m, xi)?;
    Ok(m.to_frame(xi, v).dot(&m.to_frame(xi, w)))
}

/// A tangent vector with both of its coordinate descriptions.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentAtPoint {
    pub base: Point,
    pub chart_components: DVector<f64>,
    pub frame_components: DVector<f64>,
}

impl TangentAtPoint {
    pub fn from_chart(m: &dyn Manifold, base: Point, chart_components: DVector<f64>) -> Result<Self> {
        ensure_inside(m, &base)?;
        let frame_components = m.to_frame(&base, &chart_components);
        Ok(Self {
            base,
            chart_components,
            frame_components,
        })
    }

    pub fn from_frame(m: &dyn Manifold, base: Point, frame_components: DVector<f64>) -> Result<Self> {
        ensure_inside(m, &base)?;
        let chart_components = m.from_frame(&base, &frame_components);
        Ok(Self {
            base,
            chart_components,
            frame_components,
        })
    }

    pub fn norm(&self) -> f64 {
        self.frame_components.norm()
    }
}

/// Flat ℝⁿ with the coordinate frame.
#[derive(Debug, Clone)]
pub struct Euclidean {
    pub n: usize,
}

impl Manifold for Euclidean {
    fn name(&self) -> String {
        format!("euclidean:{}", self.n)
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn frame(&self, _xi: &Point) -> DMatrix<f64> {
        DMatrix::identity(self.n, self.n)
    }
    fn christoffel(&self, _xi: &Point) -> Vec<DMatrix<f64>> {
        vec![DMatrix::zeros(self.n, self.n); self.n]
    }
    fn contains(&self, xi: &Point) -> bool {
        xi.iter().all(|v| v.is_finite())
    }
    fn to_frame(&self, _xi: &Point, v: &DVector<f64>) -> DVector<f64> {
        v.clone()
    }
    fn connection(&self, _xi: &Point, _u: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(self.n, self.n)
    }
}

/// Frame symbols of a conformally flat metric `g = λ(ξ)² δ` with frame `e_i = λ⁻¹ ∂_i`,
/// given `w = λ⁻¹ ∇ log λ`: `(Γ_k)_ij = w_j δ_ik − w_i δ_kj`.
fn conformal_christoffel(w: &DVector<f64>) -> Vec<DMatrix<f64>> {
    let n = w.len();
    (0..n)
        .map(|k| {
            let mut g = DMatrix::zeros(n, n);
            for j in 0..n {
                if j != k {
                    g[(k, j)] += w[j];
                    g[(j, k)] -= w[j];
                }
            }
            g
        })
        .collect()
}

/// Unit sphere `Sⁿ` in the stereographic chart from the antipode of the chart centre.
#[derive(Debug, Clone)]
pub struct SphereStereo {
    pub n: usize,
    /// Chart points with `|ξ|` above this bound are treated as a chart exit.
    pub bound: f64,
}

impl SphereStereo {
    pub fn new(n: usize) -> Self {
        Self { n, bound: 1e3 }
    }

    /// Chart point of an embedded point `(r₀, r₁, …, r_n)` of the unit sphere.
    pub fn chart_from_embedded(r: &DVector<f64>) -> Point {
        let n = r.len() - 1;
        DVector::from_iterator(n, (1..=n).map(|i| r[i] / (1.0 + r[0])))
    }

    pub fn embedded_from_chart(xi: &Point) -> DVector<f64> {
        let s = xi.norm_squared();
        let mut r = DVector::zeros(xi.len() + 1);
        r[0] = (1.0 - s) / (1.0 + s);
        for i in 0..xi.len() {
            r[i + 1] = 2.0 * xi[i] / (1.0 + s);
        }
        r
    }
}

impl Manifold for SphereStereo {
    fn name(&self) -> String {
        format!("sphere_stereo:{}", self.n)
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn frame(&self, xi: &Point) -> DMatrix<f64> {
        DMatrix::identity(self.n, self.n) * (0.5 * (1.0 + xi.norm_squared()))
    }
    fn christoffel(&self, xi: &Point) -> Vec<DMatrix<f64>> {
        conformal_christoffel(&(-xi))
    }
    fn contains(&self, xi: &Point) -> bool {
        xi.iter().all(|v| v.is_finite()) && xi.norm() <= self.bound
    }
    fn to_frame(&self, xi: &Point, v: &DVector<f64>) -> DVector<f64> {
        v * (2.0 / (1.0 + xi.norm_squared()))
    }
    fn connection(&self, xi: &Point, u: &DVector<f64>) -> DMatrix<f64> {
        xi * u.transpose() - u * xi.transpose()
    }
}

/// Upper half-plane model of the hyperbolic plane, `φ = ξ₂ I` on `{ξ₂ > 0}`.
#[derive(Debug, Clone)]
pub struct HyperbolicHalfPlane {
    /// Points with `ξ₂` at or below this margin count as outside the chart.
    pub margin: f64,
}

impl Default for HyperbolicHalfPlane {
    fn default() -> Self {
        Self { margin: 1e-9 }
    }
}

impl Manifold for HyperbolicHalfPlane {
    fn name(&self) -> String {
        "hyperbolic_halfplane".into()
    }
    fn dim(&self) -> usize {
        2
    }
    fn frame(&self, xi: &Point) -> DMatrix<f64> {
        DMatrix::identity(2, 2) * xi[1]
    }
    fn christoffel(&self, _xi: &Point) -> Vec<DMatrix<f64>> {
        conformal_christoffel(&DVector::from_vec(vec![0.0, -1.0]))
    }
    fn contains(&self, xi: &Point) -> bool {
        xi.iter().all(|v| v.is_finite()) && xi[1] > self.margin
    }
    fn to_frame(&self, xi: &Point, v: &DVector<f64>) -> DVector<f64> {
        v / xi[1]
    }
}

/// Hamilton product of quaternions stored as `(g₀, g₁, g₂, g₃)`.
pub fn quat_mul(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(vec![
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ])
}

/// Pure quaternion `w₁ i + w₂ j + w₃ k` of a Lie-algebra vector in the `X₁, X₂, X₃` basis.
///
/// In the 2×2 complex picture this is `[[i w₁, w₂ + i w₃], [−w₂ + i w₃, −i w₁]]`.
pub fn lie_algebra_quaternion(w: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(vec![0.0, w[0], w[1], w[2]])
}

/// Unit 3-sphere as the group SU(2) with its bi-invariant metric and the
/// left-invariant frame `X₁, X₂, X₃`.
#[derive(Debug, Clone, Default)]
pub struct Su2;

impl Su2 {
    /// Columns `X₁(g), X₂(g), X₃(g)` in `∂_{g₀..g₃}` components.
    pub fn left_invariant_frame(g: &Point) -> DMatrix<f64> {
        let (g0, g1, g2, g3) = (g[0], g[1], g[2], g[3]);
        DMatrix::from_column_slice(
            4,
            3,
            &[
                -g1, g0, g3, -g2, //
                -g2, -g3, g0, g1, //
                -g3, g2, -g1, g0,
            ],
        )
    }

    /// `∇_{X_k} X_j = ½[X_k, X_j]` with `[X₁,X₂] = 2X₃` cyclic: `(Γ_k)_ij = ε_kji`.
    pub fn structure_christoffel() -> Vec<DMatrix<f64>> {
        let eps = |a: usize, b: usize, c: usize| -> f64 {
            match (a, b, c) {
                (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
                (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
                _ => 0.0,
            }
        };
        (0..3)
            .map(|k| DMatrix::from_fn(3, 3, |i, j| eps(k, j, i)))
            .collect()
    }
}

impl Manifold for Su2 {
    fn name(&self) -> String {
        "su2".into()
    }
    fn dim(&self) -> usize {
        3
    }
    fn coord_dim(&self) -> usize {
        4
    }
    fn frame(&self, xi: &Point) -> DMatrix<f64> {
        Self::left_invariant_frame(xi)
    }
    fn christoffel(&self, _xi: &Point) -> Vec<DMatrix<f64>> {
        Self::structure_christoffel()
    }
    fn contains(&self, xi: &Point) -> bool {
        xi.len() == 4 && xi.iter().all(|v| v.is_finite()) && (xi.norm() - 1.0).abs() < 0.5
    }
    fn project(&self, xi: &mut Point) {
        let n = xi.norm();
        if n > 0.0 {
            *xi /= n;
        }
    }
    fn to_frame(&self, xi: &Point, v: &DVector<f64>) -> DVector<f64> {
        Self::left_invariant_frame(xi).transpose() * v
    }
    fn normal(&self, xi: &Point) -> Option<DVector<f64>> {
        Some(xi.normalize())
    }
    fn connection(&self, _xi: &Point, u: &DVector<f64>) -> DMatrix<f64> {
        // Γ(u) w = u × w
        DMatrix::from_row_slice(
            3,
            3,
            &[0.0, -u[2], u[1], u[2], 0.0, -u[0], -u[1], u[0], 0.0],
        )
    }
}

/// Christoffel matrices of an orthonormal frame from the frame and its
/// coordinate derivatives `dphi[a] = ∂_a φ`, via Lie brackets and Koszul's formula.
pub fn christoffel_from_frame(phi: &DMatrix<f64>, dphi: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    let n = phi.ncols();
    let lu = phi.clone().lu();
    // derivative of column j along e_k: Σ_a φ_ak ∂_a φ_{·j}
    let along = |k: usize, j: usize| -> DVector<f64> {
        let mut out = DVector::zeros(n);
        for (a, d) in dphi.iter().enumerate() {
            out.axpy(phi[(a, k)], &d.column(j).clone_owned(), 1.0);
        }
        out
    };
    // c[k][j] = frame components of [e_k, e_j]
    let mut c = vec![vec![DVector::zeros(n); n]; n];
    for k in 0..n {
        for j in 0..n {
            let bracket = along(k, j) - along(j, k);
            c[k][j] = lu.solve(&bracket).unwrap_or_else(|| DVector::from_element(n, f64::NAN));
        }
    }
    (0..n)
        .map(|k| {
            DMatrix::from_fn(n, n, |i, j| 0.5 * (c[k][j][i] - c[j][i][k] + c[i][k][j]))
        })
        .collect()
}

/// Fourth-order central difference of a matrix field along coordinate `a`.
fn central_derivative(
    f: &dyn Fn(&Point) -> DMatrix<f64>,
    xi: &Point,
    a: usize,
    h: f64,
) -> DMatrix<f64> {
    let shifted = |s: f64| {
        let mut p = xi.clone();
        p[a] += s * h;
        f(&p)
    };
    (shifted(-2.0) - shifted(2.0) + (shifted(1.0) - shifted(-1.0)) * 8.0) / (12.0 * h)
}

/// Frame field sampled on a regular tensor grid, optionally with Christoffel samples.
///
/// Between nodes the samples are interpolated with tensor-product Catmull–Rom
/// cubics. Missing Christoffels are obtained from finite differences of the
/// interpolated frame (fourth-order central, step `fd_step`).
#[derive(Debug, Clone)]
pub struct GridManifold {
    pub label: String,
    n: usize,
    axes: Vec<Vec<f64>>,
    frames: Vec<DMatrix<f64>>,
    gammas: Option<Vec<Vec<DMatrix<f64>>>>,
    pub fd_step: f64,
}

impl GridManifold {
    /// Builds the model from unordered samples `(ξ, φ, optional Γ)` covering a full tensor grid.
    pub fn from_samples(
        label: impl Into<String>,
        points: &[Point],
        frames: &[DMatrix<f64>],
        gammas: Option<&[Vec<DMatrix<f64>>]>,
        fd_step: f64,
    ) -> Result<Self> {
        let first = points.first().ok_or(Error::GridTooShort { got: 0, need: 4 })?;
        let n = first.len();
        if n == 0 {
            return Err(Error::InvalidDimension("grid manifold needs n >= 1".into()));
        }
        let mut axes: Vec<Vec<f64>> = vec![Vec::new(); n];
        for p in points {
            if p.len() != n {
                return Err(Error::InvalidDimension("inconsistent grid point dimensions".into()));
            }
            for a in 0..n {
                axes[a].push(p[a]);
            }
        }
        for ax in &mut axes {
            ax.sort_by(f64::total_cmp);
            ax.dedup();
            if ax.len() < 4 {
                return Err(Error::GridTooShort { got: ax.len(), need: 4 });
            }
        }
        let total: usize = axes.iter().map(Vec::len).product();
        if total != points.len() {
            return Err(Error::Parse(format!(
                "grid samples do not form a full tensor grid ({} samples, {} expected)",
                points.len(),
                total
            )));
        }
        let mut ordered_frames = vec![DMatrix::zeros(n, n); total];
        let mut ordered_gammas = gammas.map(|_| vec![Vec::new(); total]);
        for (idx, p) in points.iter().enumerate() {
            let mut flat = 0;
            for a in 0..n {
                let pos = axes[a]
                    .binary_search_by(|v| v.total_cmp(&p[a]))
                    .map_err(|_| Error::Parse("grid axis lookup failed".into()))?;
                flat = flat * axes[a].len() + pos;
            }
            ordered_frames[flat] = frames[idx].clone();
            if let (Some(out), Some(src)) = (ordered_gammas.as_mut(), gammas) {
                out[flat] = src[idx].clone();
            }
        }
        Ok(Self {
            label: label.into(),
            n,
            axes,
            frames: ordered_frames,
            gammas: ordered_gammas,
            fd_step,
        })
    }

    fn interpolate<T>(&self, xi: &Point, values: &[T], get: impl Fn(&T) -> DMatrix<f64>) -> DMatrix<f64> {
        // per-axis cell index and Catmull–Rom weights for nodes i-1..i+2
        let mut cells = Vec::with_capacity(self.n);
        for a in 0..self.n {
            let ax = &self.axes[a];
            let m = ax.len();
            let x = xi[a].clamp(ax[0], ax[m - 1]);
            let i = match ax.binary_search_by(|v| v.total_cmp(&x)) {
                Ok(i) => i.min(m - 2),
                Err(i) => (i - 1).min(m - 2),
            };
            let s = (x - ax[i]) / (ax[i + 1] - ax[i]);
            let (s2, s3) = (s * s, s * s * s);
            let w = [
                0.5 * (-s3 + 2.0 * s2 - s),
                0.5 * (3.0 * s3 - 5.0 * s2 + 2.0),
                0.5 * (-3.0 * s3 + 4.0 * s2 + s),
                0.5 * (s3 - s2),
            ];
            cells.push((i, w, m));
        }
        let shape = get(&values[0]);
        let mut out = DMatrix::zeros(shape.nrows(), shape.ncols());
        let combos = 4usize.pow(self.n as u32);
        for combo in 0..combos {
            let mut c = combo;
            let mut weight = 1.0;
            let mut offsets = vec![0usize; self.n];
            for a in (0..self.n).rev() {
                offsets[a] = c % 4;
                c /= 4;
            }
            // nodes outside the grid are replaced by linear extrapolation of the end pair
            let mut terms: Vec<(usize, f64)> = vec![(0, 1.0)];
            for a in 0..self.n {
                let (i, w, m) = cells[a];
                weight *= w[offsets[a]];
                let node = i as isize + offsets[a] as isize - 1;
                let pieces: Vec<(usize, f64)> = if node < 0 {
                    vec![(0, 2.0), (1, -1.0)]
                } else if node as usize >= m {
                    vec![(m - 1, 2.0), (m - 2, -1.0)]
                } else {
                    vec![(node as usize, 1.0)]
                };
                let mut next = Vec::with_capacity(terms.len() * pieces.len());
                for (flat, tw) in &terms {
                    for (p, pw) in &pieces {
                        next.push((flat * m + p, tw * pw));
                    }
                }
                terms = next;
            }
            if weight == 0.0 {
                continue;
            }
            for (flat, tw) in terms {
                out += get(&values[flat]) * (weight * tw);
            }
        }
        out
    }
}

impl Manifold for GridManifold {
    fn name(&self) -> String {
        format!("grid:{}", self.label)
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn frame(&self, xi: &Point) -> DMatrix<f64> {
        self.interpolate(xi, &self.frames, |m| m.clone())
    }
    fn christoffel(&self, xi: &Point) -> Vec<DMatrix<f64>> {
        if let Some(g) = &self.gammas {
            return (0..self.n)
                .map(|k| self.interpolate(xi, g, |v| v[k].clone()))
                .collect();
        }
        let phi = self.frame(xi);
        let f = |p: &Point| self.frame(p);
        let dphi: Vec<DMatrix<f64>> = (0..self.n)
            .map(|a| central_derivative(&f, xi, a, self.fd_step))
            .collect();
        christoffel_from_frame(&phi, &dphi)
    }
    fn contains(&self, xi: &Point) -> bool {
        xi.len() == self.n
            && xi
                .iter()
                .zip(&self.axes)
                .all(|(v, ax)| v.is_finite() && *v >= ax[0] && *v <= ax[ax.len() - 1])
    }
}

pub type Params = BTreeMap<String, f64>;

/// Constructs one of the built-in models.
///
/// `euclidean` and `sphere_stereo` take `n`; `sphere_stereo` also accepts
/// `bound`; `hyperbolic_halfplane` is two-dimensional and accepts `margin`;
/// `su2` is three-dimensional.
pub fn builtin_manifold(name: &str, params: &Params) -> Result<ManifoldRef> {
    let dim = |default: Option<usize>| -> Result<usize> {
        match params.get("n") {
            Some(v) if *v >= 1.0 && v.fract() == 0.0 => Ok(*v as usize),
            Some(v) => Err(Error::InvalidDimension(format!("n = {v}"))),
            None => default.ok_or_else(|| Error::InvalidDimension(format!("{name} needs n"))),
        }
    };
    match name {
        "euclidean" => Ok(Arc::new(Euclidean { n: dim(None)? })),
        "sphere_stereo" => {
            let mut s = SphereStereo::new(dim(None)?);
            if let Some(b) = params.get("bound") {
                s.bound = *b;
            }
            Ok(Arc::new(s))
        }
        "hyperbolic_halfplane" => {
            if dim(Some(2))? != 2 {
                return Err(Error::InvalidDimension("hyperbolic_halfplane is 2-dimensional".into()));
            }
            let mut h = HyperbolicHalfPlane::default();
            if let Some(m) = params.get("margin") {
                h.margin = *m;
            }
            Ok(Arc::new(h))
        }
        "su2" => {
            if dim(Some(3))? != 3 {
                return Err(Error::InvalidDimension("su2 requires n = 3".into()));
            }
            Ok(Arc::new(Su2))
        }
        other => Err(Error::UnknownManifold(other.to_string())),
    }
}

/// Parses `key=value` pairs separated by commas.
pub(crate) fn parse_params(s: &str) -> Result<Params> {
    let mut out = Params::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got `{part}`")))?;
        let value = v
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad number `{v}` for `{k}`")))?;
        out.insert(k.trim().to_string(), value);
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct ManifoldFile {
    name: String,
    n: Option<usize>,
    bound: Option<f64>,
    margin: Option<f64>,
    csv: Option<String>,
    fd_step: Option<f64>,
}

/// Resolves a manifold argument: a path to a spec file, or `name[:n]` /
/// `name:key=value,...` for a built-in.
pub fn manifold_from_spec(spec: &str) -> Result<ManifoldRef> {
    let path = Path::new(spec);
    if path.extension().is_some_and(|e| e == "toml") || path.is_file() {
        return load_manifold_file(path);
    }
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let params = if rest.is_empty() {
        Params::new()
    } else if let Ok(n) = rest.trim().parse::<usize>() {
        Params::from([("n".to_string(), n as f64)])
    } else {
        parse_params(rest)?
    };
    builtin_manifold(name.trim(), &params)
}

/// Loads a manifold spec file (`name`, `n`, model parameters; `csv` for grid models).
pub fn load_manifold_file(path: &Path) -> Result<ManifoldRef> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ManifoldFile =
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if file.name == "grid" {
        let csv = file
            .csv
            .ok_or_else(|| Error::Parse("grid manifold needs `csv`".into()))?;
        let csv_path = path.parent().unwrap_or(Path::new(".")).join(csv);
        let model = load_grid_csv(&csv_path, file.fd_step.unwrap_or(1e-5))?;
        if let Some(n) = file.n {
            if n != model.dim() {
                return Err(Error::InvalidDimension(format!("spec says n = {n}, grid has {}", model.dim())));
            }
        }
        return Ok(Arc::new(model));
    }
    let mut params = Params::new();
    if let Some(n) = file.n {
        params.insert("n".into(), n as f64);
    }
    if let Some(b) = file.bound {
        params.insert("bound".into(), b);
    }
    if let Some(m) = file.margin {
        params.insert("margin".into(), m);
    }
    builtin_manifold(&file.name, &params)
}

/// Reads a grid CSV with header `xi_1..xi_n, phi_11..phi_nn` (row-major),
/// optionally followed by `gamma_k_i_j` columns for all `k, i, j`.
pub fn load_grid_csv(path: &Path, fd_step: f64) -> Result<GridManifold> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Parse("empty grid csv".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    let n = header.iter().filter(|h| h.starts_with("xi_")).count();
    if n == 0 {
        return Err(Error::Parse("grid csv has no xi_ columns".into()));
    }
    let with_gamma = match header.len() {
        l if l == n + n * n => false,
        l if l == n + n * n + n * n * n => true,
        l => return Err(Error::Parse(format!("grid csv has {l} columns for n = {n}"))),
    };
    let mut points = Vec::new();
    let mut frames = Vec::new();
    let mut gammas = Vec::new();
    for (row, line) in lines.enumerate() {
        let vals: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("grid csv row {}: {e}", row + 2)))?;
        if vals.len() != header.len() {
            return Err(Error::Parse(format!("grid csv row {} has {} fields", row + 2, vals.len())));
        }
        points.push(DVector::from_column_slice(&vals[..n]));
        frames.push(DMatrix::from_row_slice(n, n, &vals[n..n + n * n]));
        if with_gamma {
            let base = n + n * n;
            gammas.push(
                (0..n)
                    .map(|k| DMatrix::from_row_slice(n, n, &vals[base + k * n * n..base + (k + 1) * n * n]))
                    .collect(),
            );
        }
    }
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    GridManifold::from_samples(
        label,
        &points,
        &frames,
        if with_gamma { Some(&gammas) } else { None },
        fd_step,
    )
}

/// Diagnostics produced by [`check_model`].
#[derive(Debug, Clone)]
pub struct ModelReport {
    pub manifold: String,
    pub samples: usize,
    /// Largest symmetric-part entry of each `Γ_k`, i.e. `½‖Γ_k + Γ_kᵀ‖∞`.
    pub antisymmetry: Vec<f64>,
    /// Smallest orientation determinant over the samples.
    pub min_det: f64,
    pub max_condition: f64,
    /// Largest deviation from the Levi-Civita symbols computed from the metric
    /// by finite differences; `None` when the model has no square chart frame.
    pub levi_civita_residual: Option<f64>,
    pub outside: usize,
}

/// Levi-Civita frame symbols at `xi` derived from the metric `g = (φφᵀ)⁻¹`
/// through coordinate Christoffel symbols. Independent of `Manifold::christoffel`.
pub fn metric_christoffel(m: &dyn Manifold, xi: &Point, h: f64) -> Option<Vec<DMatrix<f64>>> {
    let n = m.dim();
    if m.coord_dim() != n {
        return None;
    }
    let metric = |p: &Point| -> DMatrix<f64> {
        let phi = m.frame(p);
        (&phi * phi.transpose())
            .try_inverse()
            .unwrap_or_else(|| DMatrix::from_element(n, n, f64::NAN))
    };
    let frame = |p: &Point| m.frame(p);
    let g_inv = metric(xi).try_inverse()?;
    let dg: Vec<DMatrix<f64>> = (0..n).map(|a| central_derivative(&metric, xi, a, h)).collect();
    let dphi: Vec<DMatrix<f64>> = (0..n).map(|a| central_derivative(&frame, xi, a, h)).collect();
    // coordinate symbols Γ^c_ab
    let mut chris = vec![DMatrix::<f64>::zeros(n, n); n];
    for c in 0..n {
        for a in 0..n {
            for b in 0..n {
                let mut s = 0.0;
                for d in 0..n {
                    s += g_inv[(c, d)] * (dg[a][(d, b)] + dg[b][(d, a)] - dg[d][(a, b)]);
                }
                chris[c][(a, b)] = 0.5 * s;
            }
        }
    }
    let phi = m.frame(xi);
    let lu = phi.clone().lu();
    let out = (0..n)
        .map(|k| {
            let mut gk = DMatrix::zeros(n, n);
            for j in 0..n {
                // ∇_{e_k} e_j in chart components
                let mut v = DVector::zeros(n);
                for a in 0..n {
                    let pak = phi[(a, k)];
                    for b in 0..n {
                        v[b] += pak * dphi[a][(b, j)];
                        for c in 0..n {
                            v[c] += pak * phi[(b, j)] * chris[c][(a, b)];
                        }
                    }
                }
                let comp = lu.solve(&v).unwrap_or_else(|| DVector::from_element(n, f64::NAN));
                gk.set_column(j, &comp);
            }
            gk
        })
        .collect();
    Some(out)
}

/// Evaluates the model invariants at `sample_points`. Never fails; points
/// outside the chart are counted and skipped.
pub fn check_model(m: &dyn Manifold, sample_points: &[Point], fd_step: f64) -> ModelReport {
    let n = m.dim();
    let mut antisymmetry = vec![0.0f64; n];
    let mut min_det = f64::INFINITY;
    let mut max_condition = 0.0f64;
    let mut lc: Option<f64> = None;
    let mut outside = 0;
    for xi in sample_points {
        if xi.len() != m.coord_dim() || !m.contains(xi) {
            outside += 1;
            continue;
        }
        let gammas = m.christoffel(xi);
        for (k, g) in gammas.iter().enumerate() {
            antisymmetry[k] = antisymmetry[k].max(0.5 * max_abs(&(g + g.transpose())));
        }
        let phi = m.frame(xi);
        let det = if phi.is_square() {
            phi.determinant()
        } else if let Some(nu) = m.normal(xi) {
            let mut full = DMatrix::zeros(phi.nrows(), phi.ncols() + 1);
            full.set_column(0, &nu);
            full.view_mut((0, 1), (phi.nrows(), phi.ncols())).copy_from(&phi);
            full.determinant()
        } else {
            f64::NAN
        };
        min_det = min_det.min(det);
        let sv = phi.singular_values();
        let cond = sv.max() / sv.min();
        max_condition = max_condition.max(cond);
        if let Some(oracle) = metric_christoffel(m, xi, fd_step) {
            let worst = oracle
                .iter()
                .zip(&gammas)
                .map(|(a, b)| max_abs(&(a - b)))
                .fold(0.0f64, f64::max);
            lc = Some(lc.unwrap_or(0.0).max(worst));
        }
    }
    ModelReport {
        manifold: m.name(),
        samples: sample_points.len() - outside,
        antisymmetry,
        min_det,
        max_condition,
        levi_civita_residual: lc,
        outside,
    }
}
