use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by geometry, integration and verdict routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown manifold `{0}`")]
    UnknownManifold(String),
    #[error("unknown curve family `{0}`")]
    UnknownCurve(String),
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point {point:?} lies outside the chart domain of {manifold}")]
    OutsideChart { manifold: String, point: Vec<f64> },
    #[error("trajectory left the chart domain of {manifold} at t = {t}")]
    ChartExit { manifold: String, t: f64 },
    #[error("step size underflow: h = {0}")]
    StepUnderflow(f64),
    #[error("matrix is not in SO(n): orthogonality defect {defect:.3e}, det {det}")]
    NotRotation { defect: f64, det: f64 },
    #[error("grid too short: {got} samples, need at least {need}")]
    GridTooShort { got: usize, need: usize },
    #[error("parameter grid is not strictly increasing at index {0}")]
    GridNotIncreasing(usize),
    #[error("curve is not parametrized by arc length (max speed defect {0:.3e}); reparametrize first")]
    NotUnitSpeed(f64),
    #[error("speed vanishes at t = {t} (|x'| = {speed:.3e})")]
    VanishingSpeed { t: f64, speed: f64 },
    #[error("regularity failure: curvature {index} vanishes at t = {t}; {hint}")]
    Regularity { index: usize, t: f64, hint: &'static str },
    #[error("curve is not C2 near t = {t} (curvature jump {jump:.3e})")]
    NotC2 { t: f64, jump: f64 },
    #[error("curve is not closed: endpoint gap {0:.3e}")]
    NotClosed(f64),
    #[error("Frenet frames are not extendable to t = {t}: nearest regular sample is {gap} away")]
    NotExtendable { t: f64, gap: f64 },
    #[error("curves do not match: {0}")]
    Mismatch(String),
    #[error("{0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of the numerical integration itself rather than of the input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::ChartExit { .. } | Error::StepUnderflow(_) | Error::NotExtendable { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
