//! Fixed-step classical Runge–Kutta on a flat state vector.

use nalgebra::{DMatrix, DVector};

use crate::curve::uniform_grid;
use crate::error::{Error, Result};

/// Step control shared by every integrator in the crate.
///
/// The grid is uniform. `h` takes precedence over `steps`; with neither set
/// the interval is split into 10 000 steps.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntegratorOptions {
    pub steps: Option<usize>,
    pub h: Option<f64>,
}

pub const DEFAULT_STEPS: usize = 10_000;

impl IntegratorOptions {
    pub fn steps(steps: usize) -> Self {
        Self {
            steps: Some(steps),
            h: None,
        }
    }

    pub fn step(h: f64) -> Self {
        Self { steps: None, h: Some(h) }
    }

    pub fn grid(&self, t0: f64, t1: f64) -> Result<Vec<f64>> {
        let span = t1 - t0;
        if !(span > 0.0) || !span.is_finite() {
            return Err(Error::InvalidParameter(format!("empty interval [{t0}, {t1}]")));
        }
        let steps = match (self.h, self.steps) {
            (Some(h), _) => {
                if !(h > 0.0) {
                    return Err(Error::InvalidParameter(format!("step {h} must be positive")));
                }
                (span / h).round().max(1.0) as usize
            }
            (None, Some(0)) => return Err(Error::InvalidParameter("steps must be positive".into())),
            (None, Some(n)) => n,
            (None, None) => DEFAULT_STEPS,
        };
        let h = span / steps as f64;
        if h < 1e-14 * (t0.abs().max(t1.abs()) + 1.0) {
            return Err(Error::StepUnderflow(h));
        }
        Ok(uniform_grid(t0, t1, steps))
    }
}

/// States on the grid up to the last accepted step.
#[derive(Debug, Clone)]
pub(crate) struct Integration {
    pub t: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    /// Time at which the state left the admissible region, if it did.
    pub exit: Option<f64>,
}

/// Integrates `y' = rhs(t, y)` over `grid`.
///
/// `post` runs after every step (re-orthonormalization, renormalization).
/// Integration stops early when `inside` rejects a state or a state stops
/// being finite; the accepted prefix is returned with `exit` set.
pub(crate) fn rk4(
    grid: &[f64],
    y0: DVector<f64>,
    mut rhs: impl FnMut(f64, &DVector<f64>) -> DVector<f64>,
    mut post: impl FnMut(&mut DVector<f64>),
    mut inside: impl FnMut(&DVector<f64>) -> bool,
) -> Integration {
    let mut t_out = vec![grid[0]];
    let mut states = vec![y0.clone()];
    let mut y = y0;
    for w in grid.windows(2) {
        let (t, h) = (w[0], w[1] - w[0]);
        let k1 = rhs(t, &y);
        let k2 = rhs(t + 0.5 * h, &(&y + &k1 * (0.5 * h)));
        let k3 = rhs(t + 0.5 * h, &(&y + &k2 * (0.5 * h)));
        let k4 = rhs(t + h, &(&y + &k3 * h));
        let mut next = &y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        post(&mut next);
        if !next.iter().all(|v| v.is_finite()) || !inside(&next) {
            return Integration {
                t: t_out,
                states,
                exit: Some(w[1]),
            };
        }
        y = next;
        t_out.push(w[1]);
        states.push(y.clone());
    }
    Integration {
        t: t_out,
        states,
        exit: None,
    }
}

/// Column-major view of an `n × n` block of `state` starting at `offset`.
pub(crate) fn unpack(state: &DVector<f64>, offset: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(n, n, &state.as_slice()[offset..offset + n * n])
}

pub(crate) fn pack(state: &mut DVector<f64>, offset: usize, m: &DMatrix<f64>) {
    state.as_mut_slice()[offset..offset + m.len()].copy_from_slice(m.as_slice());
}
