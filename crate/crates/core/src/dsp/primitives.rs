use crate::error::{Error, Result};
use crate::signal::wrap_degrees;

/// Samples per cycle at full phase resolution.
pub const MAX_SAMPLES_PER_CYCLE: usize = 360;
/// Fewest samples per cycle accepted before a frequency is rejected.
pub const MIN_SAMPLES_PER_CYCLE: usize = 8;

/// ADC rate and whole samples per excitation cycle for frequency `f`.
pub fn select_sample_rate(f: f64, ceiling: f64) -> Result<(f64, usize)> {
    if !(f.is_finite() && f > 0.0) {
        return Err(Error::invalid(format!(
            "frequency must be positive, got {f}"
        )));
    }
    if !(ceiling.is_finite() && ceiling > 0.0) {
        return Err(Error::InvalidConfig(
            "sample-rate ceiling must be positive".into(),
        ));
    }
    // the epsilon keeps e.g. 4.104e6 / 11400 = 359.99999... at 360
    let fit = (ceiling / f + 1e-9).floor();
    let n = if fit >= MAX_SAMPLES_PER_CYCLE as f64 {
        MAX_SAMPLES_PER_CYCLE
    } else {
        fit as usize
    };
    if n < MIN_SAMPLES_PER_CYCLE {
        return Err(Error::FrequencyTooHigh {
            frequency: f,
            samples_per_cycle: n,
        });
    }
    Ok((n as f64 * f, n))
}

pub fn phase_resolution(samples_per_cycle: usize) -> f64 {
    360.0 / samples_per_cycle as f64
}

pub fn mean(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::invalid("empty sample array"));
    }
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    // second pass removes most of the rounding left by the first
    Ok(m + x.iter().map(|v| v - m).sum::<f64>() / n)
}

pub fn remove_dc(x: &[f64]) -> Result<Vec<f64>> {
    let m = mean(x)?;
    Ok(x.iter().map(|v| v - m).collect())
}

pub fn rms(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::invalid("empty sample array"));
    }
    Ok((x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt())
}

pub fn tia_volts_to_current(v_rms: f64, feedback_ohms: f64) -> Result<f64> {
    if !(feedback_ohms.is_finite() && feedback_ohms > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "feedback resistance must be > 0, got {feedback_ohms}"
        )));
    }
    Ok(v_rms / feedback_ohms)
}

/// Circular lag `k` in `0..n` maximizing `Σ x[l]·y[(k+l) mod L]`; the smallest
/// lag wins ties.
pub fn cross_correlate_lag(x: &[f64], y: &[f64], n: usize) -> Result<usize> {
    let len = x.len();
    if len != y.len() {
        return Err(Error::invalid(format!(
            "channel lengths differ: {} vs {}",
            len,
            y.len()
        )));
    }
    if n == 0 || len == 0 || !len.is_multiple_of(n) {
        return Err(Error::invalid(format!(
            "record of {len} samples is not a whole number of {n}-sample cycles"
        )));
    }
    let mut best = (0, f64::NEG_INFINITY);
    for k in 0..n {
        let (head, tail) = y.split_at(k);
        let r: f64 = x[..len - k]
            .iter()
            .zip(tail)
            .chain(x[len - k..].iter().zip(head))
            .map(|(a, b)| a * b)
            .sum();
        if r > best.1 {
            best = (k, r);
        }
    }
    Ok(best.0)
}

/// Lag to phase, removing the 180° of the inverting TIA.
pub fn lag_to_phase(k: usize, n: usize) -> f64 {
    wrap_degrees(k as f64 * 360.0 / n as f64 - 180.0)
}

/// Phase the skew adds to the measured phase.
///
/// The current sample is taken `skew` late, i.e. it reads `i(t + skew)`: the
/// current appears to lead by `360·f·skew` degrees, so the apparent impedance
/// phase is lowered by that much.
pub fn mux_phase_offset(f: f64, skew: f64) -> f64 {
    -360.0 * f * skew
}

/// Subtracts a phase offset and wraps into `[-180, 180)`.
pub fn compensate_phase(phase: f64, offset: f64) -> f64 {
    wrap_degrees(phase - offset)
}

pub fn compensate_mux_phase(phase: f64, f: f64, skew: f64) -> f64 {
    compensate_phase(phase, mux_phase_offset(f, skew))
}

/// Circular mean of angles in degrees.
pub fn circular_mean_deg(angles: &[f64]) -> Result<f64> {
    if angles.is_empty() {
        return Err(Error::invalid("no angles to average"));
    }
    let (s, c) = angles.iter().fold((0.0, 0.0), |(s, c), a| {
        let r = a.to_radians();
        (s + r.sin(), c + r.cos())
    });
    Ok(wrap_degrees(s.atan2(c).to_degrees()))
}
