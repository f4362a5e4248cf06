use super::MAX_CODE;
use crate::error::{Error, Result};
use crate::signal::Waveform;

/// Default ceiling: 360 samples per cycle up to 11.4 kHz.
pub const DEFAULT_MAX_SAMPLE_RATE: f64 = 4_104_000.0;
/// Hardware conversion limit of the microcontroller ADC.
pub const HARDWARE_MAX_SAMPLE_RATE: f64 = 5_000_000.0;
/// Voltage-to-current sample delay observed during CV scans.
pub const CV_MUX_SKEW: f64 = 653e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcConfig {
    pub v_ref: f64,
    pub max_sample_rate: f64,
    /// Current-channel delay after the voltage sample during EIS.
    pub eis_mux_skew: f64,
    /// Current-channel delay after the voltage sample during CV.
    pub cv_mux_skew: f64,
}

impl Default for AdcConfig {
    fn default() -> Self {
        AdcConfig {
            v_ref: 3.3,
            max_sample_rate: DEFAULT_MAX_SAMPLE_RATE,
            eis_mux_skew: 1.0 / DEFAULT_MAX_SAMPLE_RATE,
            cv_mux_skew: CV_MUX_SKEW,
        }
    }
}

impl AdcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_ref.is_finite() && self.v_ref > 0.0) {
            return Err(Error::InvalidConfig(
                "ADC reference must be positive".into(),
            ));
        }
        if !(self.max_sample_rate.is_finite()
            && self.max_sample_rate > 0.0
            && self.max_sample_rate <= HARDWARE_MAX_SAMPLE_RATE)
        {
            return Err(Error::InvalidConfig(format!(
                "ADC sample-rate ceiling must be in (0, {HARDWARE_MAX_SAMPLE_RATE}], got {}",
                self.max_sample_rate
            )));
        }
        for (name, v) in [("EIS", self.eis_mux_skew), ("CV", self.cv_mux_skew)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} mux skew must be >= 0"
                )));
            }
        }
        Ok(())
    }

    pub fn lsb(&self) -> f64 {
        self.v_ref / MAX_CODE as f64
    }

    /// Nearest code (ties to even) and whether the input had to be clamped.
    pub fn quantize(&self, volts: f64) -> (u16, bool) {
        let c = (volts / self.v_ref * MAX_CODE as f64).round_ties_even();
        if c < 0.0 {
            (0, true)
        } else if c > MAX_CODE as f64 {
            (MAX_CODE, true)
        } else {
            (c as u16, volts < 0.0 || volts > self.v_ref)
        }
    }

    pub fn to_volts(&self, count: u16) -> f64 {
        self.v_ref * count as f64 / MAX_CODE as f64
    }
}

/// `V = 3.3 / 4095 · count`.
pub fn counts_to_volts(count: u16) -> Result<f64> {
    if count > MAX_CODE {
        return Err(Error::invalid(format!("ADC count {count} exceeds 4095")));
    }
    Ok(3.3 * count as f64 / MAX_CODE as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Voltage,
    Current,
}

/// Block of 12-bit counts from one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBlock {
    pub channel: Channel,
    pub sample_rate: f64,
    /// Time of the first sample, seconds.
    pub t0: f64,
    pub counts: Vec<u16>,
}

impl SampleBlock {
    pub fn new(channel: Channel, sample_rate: f64, t0: f64, counts: Vec<u16>) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if !t0.is_finite() {
            return Err(Error::invalid("t0 must be finite"));
        }
        if let Some(c) = counts.iter().find(|&&c| c > MAX_CODE) {
            return Err(Error::invalid(format!("count {c} exceeds 12 bits")));
        }
        Ok(SampleBlock {
            channel,
            sample_rate,
            t0,
            counts,
        })
    }

    pub fn volts(&self, cfg: &AdcConfig) -> Vec<f64> {
        self.counts.iter().map(|&c| cfg.to_volts(c)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Acquisition {
    pub voltage: SampleBlock,
    pub current: SampleBlock,
    /// Some sample fell outside `[0, V_ref]` and was clamped.
    pub clipped: bool,
}

/// Samples `n` voltage-channel points at `t0 + k/rate` and the current channel
/// `mux_skew` later, through one shared 12-bit converter.
pub fn adc_acquire(
    cfg: &AdcConfig,
    voltage: &Waveform,
    current: &Waveform,
    sample_rate: f64,
    t0: f64,
    n: usize,
    mux_skew: f64,
) -> Result<Acquisition> {
    cfg.validate()?;
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::invalid("sample rate must be positive"));
    }
    if sample_rate > cfg.max_sample_rate * (1.0 + 1e-12) {
        return Err(Error::SampleRate {
            requested: sample_rate,
            ceiling: cfg.max_sample_rate,
        });
    }
    if !(mux_skew.is_finite() && mux_skew >= 0.0) {
        return Err(Error::invalid("mux skew must be non-negative"));
    }
    if n == 0 {
        return Err(Error::invalid("nothing to acquire"));
    }
    let t_last = t0 + (n - 1) as f64 / sample_rate + mux_skew;
    for w in [voltage, current] {
        let tol = 1e-9 / w.rate;
        if w.is_empty() || t0 < w.t0 - tol || t_last > w.end_time() + tol {
            return Err(Error::invalid(format!(
                "signal [{}, {}] s does not cover acquisition window [{t0}, {t_last}] s",
                w.t0,
                w.end_time()
            )));
        }
    }

    let mut clipped = false;
    let mut sample = |w: &Waveform, skew: f64| -> Vec<u16> {
        (0..n)
            .map(|k| {
                let (c, clip) = cfg.quantize(w.value_at(t0 + k as f64 / sample_rate + skew));
                clipped |= clip;
                c
            })
            .collect()
    };
    let v_counts = sample(voltage, 0.0);
    let i_counts = sample(current, mux_skew);
    Ok(Acquisition {
        voltage: SampleBlock::new(Channel::Voltage, sample_rate, t0, v_counts)?,
        current: SampleBlock::new(Channel::Current, sample_rate, t0 + mux_skew, i_counts)?,
        clipped,
    })
}
