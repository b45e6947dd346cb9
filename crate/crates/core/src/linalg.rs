//! Small dense linear-algebra helpers shared by the integrators and verdicts.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Re-orthonormalizes the columns of `m` in place by modified Gram-Schmidt.
///
/// Column order is preserved, so a matrix close to SO(n) stays close to the
/// same rotation and keeps its orientation.
pub fn orthonormalize(m: &mut DMatrix<f64>) {
    let cols = m.ncols();
    for j in 0..cols {
        for k in 0..j {
            let proj = m.column(k).dot(&m.column(j));
            let ck = m.column(k).clone_owned();
            m.column_mut(j).axpy(-proj, &ck, 1.0);
        }
        let norm = m.column(j).norm();
        if norm > 0.0 {
            m.column_mut(j).unscale_mut(norm);
        }
    }
}

/// Max-entry norm of `mᵀm − I`.
pub fn orthogonality_defect(m: &DMatrix<f64>) -> f64 {
    let g = m.transpose() * m;
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Fails unless `m` is a square rotation matrix within `tol`.
pub fn check_rotation(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidDimension(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let defect = orthogonality_defect(m);
    let det = m.determinant();
    if defect > tol || det <= 0.0 {
        return Err(Error::NotRotation { defect, det });
    }
    Ok(())
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Unit vector completing the orthonormal columns of `cols` (n × (n−1)) to a
/// positively oriented basis, via cofactor expansion along the last column.
pub fn complete_oriented_basis(cols: &DMatrix<f64>) -> DVector<f64> {
    let n = cols.nrows();
    debug_assert_eq!(cols.ncols() + 1, n);
    if n == 1 {
        return DVector::from_element(1, 1.0);
    }
    let mut out = DVector::zeros(n);
    for i in 0..n {
        let minor = cols.clone().remove_row(i);
        let sign = if (i + 1 + n).is_multiple_of(2) { 1.0 } else { -1.0 };
        out[i] = sign * minor.determinant();
    }
    let norm = out.norm();
    if norm > 0.0 {
        out /= norm;
    }
    out
}

/// Result of an orthogonal Procrustes fit `target ≈ rotation · source`.
#[derive(Debug, Clone)]
pub struct ProcrustesFit {
    pub rotation: DMatrix<f64>,
    /// Determinant of the best fit over all of O(n); negative when a
    /// reflection would fit better than any rotation.
    pub unconstrained_det: f64,
    pub singular_values: DVector<f64>,
}

/// Weighted orthogonal Procrustes with the determinant constrained to +1.
///
/// Returns `None` when all sample pairs are zero.
pub fn procrustes(
    sources: &[DVector<f64>],
    targets: &[DVector<f64>],
    weights: &[f64],
) -> Option<ProcrustesFit> {
    let n = sources.first()?.len();
    let mut h = DMatrix::<f64>::zeros(n, n);
    for ((a, b), w) in sources.iter().zip(targets).zip(weights) {
        h += (b * a.transpose()) * *w;
    }
    if max_abs(&h) == 0.0 {
        return None;
    }
    let svd = h.svd(true, true);
    let u = svd.u?;
    let v_t = svd.v_t?;
    let unconstrained = &u * &v_t;
    let det = unconstrained.determinant();
    let mut d = DMatrix::<f64>::identity(n, n);
    if det < 0.0 {
        // flip the direction belonging to the smallest singular value
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, s)| if *s < acc.1 { (i, *s) } else { acc });
        d[(imin, imin)] = -1.0;
    }
    let rotation = &u * d * &v_t;
    Some(ProcrustesFit {
        rotation,
        unconstrained_det: det,
        singular_values: svd.singular_values,
    })
}

/// Finite-difference weights for the first derivative at `x0` from `nodes`
/// (Fornberg's recursion, truncated at order one).
pub fn fd_weights(x0: f64, nodes: &[f64]) -> Vec<f64> {
    let m = nodes.len();
    let mut c = vec![[0.0f64; 2]; m];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..m {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// Five-point stencil for the derivative at sample `i`: centred in the
/// interior, one-sided (same order) at the ends. Returns `(first index, weights)`.
pub fn stencil(t: &[f64], i: usize) -> (usize, Vec<f64>) {
    let len = t.len();
    let width = 5.min(len);
    let start = i.saturating_sub(width / 2).min(len - width);
    (start, fd_weights(t[i], &t[start..start + width]))
}

/// Differentiates vector samples on the grid `t`.
pub fn differentiate(t: &[f64], samples: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    if t.len() < 5 {
        return Err(Error::GridTooShort { got: t.len(), need: 5 });
    }
    Ok((0..t.len())
        .map(|i| {
            let (start, w) = stencil(t, i);
            let mut d = DVector::zeros(samples[i].len());
            for (k, wk) in w.iter().enumerate() {
                d.axpy(*wk, &samples[start + k], 1.0);
            }
            d
        })
        .collect())
}

/// Representative of `a` modulo 2π in (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

pub(crate) const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

/// Five-point Gauss–Legendre quadrature of `f` over `[a, b]`.
pub(crate) fn gauss5(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    GAUSS5.iter().map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}
