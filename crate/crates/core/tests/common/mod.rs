//! Shared generators for the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rollkit::curve::{CurveFn, SampledCurve};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

/// `p(t) = base + a t + b t² + c sin(3t)` with random coefficients.
#[derive(Debug, Clone)]
pub struct Wiggle {
    pub base: DVector<f64>,
    pub a: DVector<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
}

impl Wiggle {
    pub fn random(rng: &mut ChaCha8Rng, base: DVector<f64>, scale: f64) -> Self {
        let n = base.len();
        let mut draw = |s: f64| DVector::from_fn(n, |_, _| rng.gen_range(-s..s));
        let mut a = draw(scale);
        a[0] += scale;
        Self {
            base,
            a,
            b: draw(0.5 * scale),
            c: draw(0.3 * scale),
        }
    }

    pub fn eval(&self, t: f64) -> (DVector<f64>, DVector<f64>) {
        let x = &self.base + &self.a * t + &self.b * (t * t) + &self.c * (3.0 * t).sin();
        let d = &self.a + &self.b * (2.0 * t) + &self.c * (3.0 * (3.0 * t).cos());
        (x, d)
    }

    pub fn curve(self, t1: f64, samples: usize) -> SampledCurve {
        let f: CurveFn = Arc::new(move |t| self.eval(t));
        SampledCurve::analytic(0.0, t1, samples, f).unwrap()
    }

    /// The wiggle pushed radially onto the unit sphere in ℝ⁴.
    pub fn quaternion_curve(self, t1: f64, samples: usize) -> SampledCurve {
        let f: CurveFn = Arc::new(move |t| {
            let (p, dp) = self.eval(t);
            let r = p.norm();
            let g = &p / r;
            let dg = (&dp - &g * g.dot(&dp)) / r;
            (g, dg)
        });
        SampledCurve::analytic(0.0, t1, samples, f).unwrap()
    }
}

/// Uniformly distributed rotation of ℝⁿ (QR of a Gaussian-like matrix, sign fixed).
pub fn random_rotation(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let qr = m.qr();
    let mut q = qr.q();
    if q.determinant() < 0.0 {
        let c = -q.column(0).clone_owned();
        q.set_column(0, &c);
    }
    q
}

pub fn rotation_about(axis: usize, angle: f64) -> DMatrix<f64> {
    let mut r = DMatrix::identity(3, 3);
    let (i, j) = ((axis + 1) % 3, (axis + 2) % 3);
    r[(i, i)] = angle.cos();
    r[(i, j)] = -angle.sin();
    r[(j, i)] = angle.sin();
    r[(j, j)] = angle.cos();
    r
}

/// Applies `x ↦ R x + b` to a Euclidean curve, keeping analytic evaluation.
pub fn rigid_copy(c: &SampledCurve, r: &DMatrix<f64>, b: &DVector<f64>) -> SampledCurve {
    let (r, b) = (r.clone(), b.clone());
    let src = c.clone();
    let f: CurveFn = Arc::new(move |t| {
        let (x, d) = src.eval(t);
        (&r * x + &b, &r * d)
    });
    SampledCurve::analytic(c.t0(), c.t1(), c.len(), f)
        .unwrap()
        .with_flags(c.arc_length, c.closed)
}

pub fn sup<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0f64, f64::max)
}
