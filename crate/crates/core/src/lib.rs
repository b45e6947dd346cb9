pub mod cli;
pub mod curve;
pub mod error;
pub mod existence;
pub mod frenet;
pub mod geometry;
pub mod integrate;
pub mod linalg;
pub mod report;
pub mod rolling;
pub mod synthesis;
pub mod transport;

pub use error::{Error, Result};
