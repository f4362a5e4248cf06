use std::f64::consts::PI;

use super::MAX_CODE;
use crate::error::{Error, Result};
use crate::signal::Waveform;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DacConfig {
    /// Output voltage at code 4095.
    pub full_scale: f64,
}

impl Default for DacConfig {
    fn default() -> Self {
        DacConfig { full_scale: 3.3 }
    }
}

impl DacConfig {
    pub fn validate(&self) -> Result<()> {
        if self.full_scale.is_finite() && self.full_scale > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "DAC full scale must be positive, got {}",
                self.full_scale
            )))
        }
    }

    pub fn lsb(&self) -> f64 {
        self.full_scale / MAX_CODE as f64
    }

    /// Nearest code, ties to even, clamped to the 12-bit range.
    pub fn code_for(&self, volts: f64) -> u16 {
        let c = (volts / self.full_scale * MAX_CODE as f64).round_ties_even();
        c.clamp(0.0, MAX_CODE as f64) as u16
    }

    pub fn volts(&self, code: u16) -> f64 {
        self.full_scale * code as f64 / MAX_CODE as f64
    }

    fn check_in_rails(&self, v: f64, what: &str) -> Result<()> {
        // half an LSB of slack: the value still maps onto a valid code
        let slack = self.lsb() / 2.0;
        if v.is_finite() && v >= -slack && v <= self.full_scale + slack {
            Ok(())
        } else {
            Err(Error::ExcitationOutOfRange(format!(
                "{what} {v} V outside 0..{} V",
                self.full_scale
            )))
        }
    }
}

/// Code sequence played at a fixed update rate.
#[derive(Debug, Clone, PartialEq)]
pub struct DacSignal {
    pub codes: Vec<u16>,
    pub update_rate: f64,
    pub full_scale: f64,
}

impl DacSignal {
    pub fn step_interval(&self) -> f64 {
        1.0 / self.update_rate
    }

    /// Time from the first to the last code update.
    pub fn duration(&self) -> f64 {
        self.codes.len().saturating_sub(1) as f64 / self.update_rate
    }

    pub fn volts(&self) -> Vec<f64> {
        let cfg = DacConfig {
            full_scale: self.full_scale,
        };
        self.codes.iter().map(|&c| cfg.volts(c)).collect()
    }

    /// Reconstructed analog output, linear between code updates.
    pub fn waveform(&self) -> Waveform {
        Waveform {
            t0: 0.0,
            rate: self.update_rate,
            samples: self.volts(),
        }
    }

    /// Reconstructed output resampled `oversample` times per update.
    pub fn waveform_oversampled(&self, oversample: usize) -> Waveform {
        let base = self.waveform();
        if oversample <= 1 {
            return base;
        }
        let rate = self.update_rate * oversample as f64;
        let n = (self.codes.len().saturating_sub(1)) * oversample + 1;
        let samples = (0..n)
            .map(|k| {
                let i = k / oversample;
                let frac = (k % oversample) as f64 / oversample as f64;
                let a = base.samples[i];
                if frac == 0.0 {
                    a
                } else {
                    a + frac * (base.samples[i + 1] - a)
                }
            })
            .collect();
        Waveform {
            t0: 0.0,
            rate,
            samples,
        }
    }
}

/// Quantized sine `dc_offset + amplitude·sin(2πft)` lasting `cycles` periods.
pub fn dac_sine(
    cfg: &DacConfig,
    f: f64,
    amplitude: f64,
    dc_offset: f64,
    cycles: f64,
    update_rate: f64,
) -> Result<DacSignal> {
    cfg.validate()?;
    if !(f.is_finite() && f > 0.0) {
        return Err(Error::invalid(format!(
            "frequency must be positive, got {f}"
        )));
    }
    if !(update_rate.is_finite() && update_rate > 0.0) {
        return Err(Error::invalid("update rate must be positive"));
    }
    if f >= update_rate / 2.0 {
        return Err(Error::invalid(format!(
            "frequency {f} Hz at or above Nyquist of {update_rate} Hz"
        )));
    }
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::invalid("amplitude must be non-negative"));
    }
    if !(cycles.is_finite() && cycles > 0.0) {
        return Err(Error::invalid("duration must be positive"));
    }
    cfg.check_in_rails(dc_offset + amplitude, "sine peak")?;
    cfg.check_in_rails(dc_offset - amplitude, "sine trough")?;

    let n = (cycles * update_rate / f).round() as usize;
    let codes = (0..n)
        .map(|k| {
            let t = k as f64 / update_rate;
            cfg.code_for(dc_offset + amplitude * (2.0 * PI * f * t).sin())
        })
        .collect();
    Ok(DacSignal {
        codes,
        update_rate,
        full_scale: cfg.full_scale,
    })
}

/// One-LSB staircase from `center + v_start` to `center + v_end` at `rate` V/s.
pub fn dac_ramp(
    cfg: &DacConfig,
    center: f64,
    v_start: f64,
    v_end: f64,
    rate: f64,
) -> Result<DacSignal> {
    cfg.validate()?;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::invalid(format!(
            "ramp rate must be positive, got {rate}"
        )));
    }
    if !(v_start.is_finite() && v_end.is_finite()) || v_start == v_end {
        return Err(Error::invalid("ramp needs distinct finite end points"));
    }
    cfg.check_in_rails(center + v_start, "ramp start")?;
    cfg.check_in_rails(center + v_end, "ramp end")?;

    let a = cfg.code_for(center + v_start);
    let b = cfg.code_for(center + v_end);
    let codes: Vec<u16> = if a <= b {
        (a..=b).collect()
    } else {
        (b..=a).rev().collect()
    };
    Ok(DacSignal {
        codes,
        update_rate: rate / cfg.lsb(),
        full_scale: cfg.full_scale,
    })
}
