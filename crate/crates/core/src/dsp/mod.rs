//! Firmware measurement engine.

mod cv;
mod eis;
mod primitives;

pub use cv::{cv_scan, first_leg, linear_fit, zero_current_voltage, CvPoint, CvScanParams};
pub use eis::{
    eis_measure_point, eis_repeat, eis_scan, eis_scan_with, EisPoint, EisScanParams, Execution,
    ANALYSIS_CYCLES,
};
pub use primitives::{
    circular_mean_deg, compensate_mux_phase, compensate_phase, cross_correlate_lag, lag_to_phase,
    mean, mux_phase_offset, phase_resolution, remove_dc, rms, select_sample_rate,
    tia_volts_to_current, MAX_SAMPLES_PER_CYCLE, MIN_SAMPLES_PER_CYCLE,
};

use crate::convert::{AdcConfig, DacConfig};
use crate::error::Result;
use crate::frontend::FrontEndConfig;

/// Everything between the cell and the sample buffers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InstrumentConfig {
    pub frontend: FrontEndConfig,
    pub dac: DacConfig,
    pub adc: AdcConfig,
}

impl InstrumentConfig {
    pub fn validate(&self) -> Result<()> {
        self.frontend.validate()?;
        self.dac.validate()?;
        self.adc.validate()
    }
}
