//! FMCW automotive radar simulation with intelligent reflective surfaces on the
//! target and mutual interference between radars.
//!
//! The pipeline is: [`synth`] builds a de-chirped beat frame for a [`synth::Scenario`],
//! [`processing`] turns it into a range-Doppler map and runs CA-CFAR, and
//! [`experiments`] repeats that over Monte-Carlo trials and reflection gains.

pub mod error;
pub mod experiments;
pub mod io;
pub mod irs;
pub mod params;
pub mod processing;
pub mod propagation;
pub mod scenario;
pub mod seed;
pub mod synth;
pub mod units;

pub use error::{Error, Result};
