//! 12-bit DAC synthesis and ADC acquisition.

mod adc;
mod dac;
pub mod dump;

pub use adc::{
    adc_acquire, counts_to_volts, Acquisition, AdcConfig, Channel, SampleBlock, CV_MUX_SKEW,
    DEFAULT_MAX_SAMPLE_RATE, HARDWARE_MAX_SAMPLE_RATE,
};
pub use dac::{dac_ramp, dac_sine, DacConfig, DacSignal};

pub const RESOLUTION_BITS: u32 = 12;
pub const MAX_CODE: u16 = (1 << RESOLUTION_BITS) - 1;
