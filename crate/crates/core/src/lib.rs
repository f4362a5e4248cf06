//! Software model of a miniature single-supply potentiostat.
//!
//! The signal chain runs cell model → analog front-end → 12-bit DAC/ADC →
//! firmware DSP, with calibration and host-side tooling on top. Every random
//! draw comes from an explicit seed, so identical inputs give bit-identical
//! outputs whether or not the `parallel` feature is enabled.

pub mod calibration;
pub mod cell;
pub mod convert;
pub mod dsp;
mod error;
pub mod frontend;
pub mod fsutil;
pub mod host;
pub mod par;
pub mod signal;
pub mod units;

pub use error::{Error, Result};
