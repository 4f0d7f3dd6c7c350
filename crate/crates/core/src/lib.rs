//! Biometric verification error rates, demographic fairness metrics and
//! hill-climbing synthesis of score datasets with prescribed operating points.

pub mod cli;
pub mod error;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod synth;
pub mod verify;

pub use error::{Error, Result};
