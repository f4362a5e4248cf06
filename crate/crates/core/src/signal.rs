//! Uniformly sampled analog signals and a few shared numeric helpers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A uniformly sampled signal, interpreted as piecewise linear between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub t0: f64,
    pub rate: f64,
    pub samples: Vec<f64>,
}

impl Waveform {
    pub fn new(t0: f64, rate: f64, samples: Vec<f64>) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {rate}"
            )));
        }
        if !t0.is_finite() {
            return Err(Error::invalid("t0 must be finite"));
        }
        Ok(Waveform { t0, rate, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn step(&self) -> f64 {
        1.0 / self.rate
    }

    /// Time of the last sample.
    pub fn end_time(&self) -> f64 {
        self.t0 + self.samples.len().saturating_sub(1) as f64 / self.rate
    }

    /// Linearly interpolated value at `t`; held at the end values outside the record.
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.samples.len();
        match n {
            0 => 0.0,
            1 => self.samples[0],
            _ => {
                let pos = (t - self.t0) * self.rate;
                if pos <= 0.0 {
                    return self.samples[0];
                }
                let i = pos.floor() as usize;
                if i >= n - 1 {
                    return self.samples[n - 1];
                }
                let frac = pos - i as f64;
                if frac == 0.0 {
                    self.samples[i]
                } else {
                    self.samples[i] + frac * (self.samples[i + 1] - self.samples[i])
                }
            }
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Waveform {
        Waveform {
            t0: self.t0,
            rate: self.rate,
            samples: self.samples.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Wraps an angle in degrees into `[-180, 180)`.
pub fn wrap_degrees(deg: f64) -> f64 {
    let w = deg - 360.0 * ((deg + 180.0) / 360.0).floor();
    // floor can land exactly on the upper edge after rounding
    if w >= 180.0 {
        w - 360.0
    } else {
        w
    }
}

/// SplitMix64 step, used to derive independent child seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic generator for one noise stream of a seeded experiment.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
