//! Impedance measurement: one frequency point, averaged points and sweeps.

use super::primitives::{
    circular_mean_deg, compensate_mux_phase, cross_correlate_lag, lag_to_phase, remove_dc, rms,
    select_sample_rate, tia_volts_to_current,
};
use super::InstrumentConfig;
use crate::cell::{settling_time_constant, CellNetwork, InitialState};
use crate::convert::{adc_acquire, dac_sine};
use crate::error::{Error, Result};
use crate::frontend::drive_cell;
use crate::par::{IntoParallelIterator, ParallelIterator};
use crate::signal::derive_seed;

/// Whole cycles analyzed per point.
pub const ANALYSIS_CYCLES: usize = 4;
/// Upper bound on automatically extended settling.
const MAX_SETTLE_CYCLES: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EisScanParams {
    pub f_start: f64,
    pub f_end: f64,
    pub f_step: f64,
    /// Peak sine amplitude across the cell, volts.
    pub excitation_amplitude: f64,
    pub n_average: usize,
    /// Cycles discarded before analysis; extended to five cell time constants
    /// when the cell is slower.
    pub settle_cycles: usize,
    pub f_min: f64,
    pub f_max: f64,
    /// Correct the phase for the voltage/current sampling skew.
    pub compensate_skew: bool,
}

impl Default for EisScanParams {
    fn default() -> Self {
        EisScanParams {
            f_start: 100.0,
            f_end: 25_000.0,
            f_step: 50.0,
            excitation_amplitude: 0.05,
            n_average: 1,
            settle_cycles: 5,
            f_min: 100.0,
            f_max: 50_000.0,
            compensate_skew: true,
        }
    }
}

impl EisScanParams {
    pub fn single(f: f64) -> Self {
        EisScanParams {
            f_start: f,
            f_end: f,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.f_start,
            self.f_end,
            self.f_step,
            self.excitation_amplitude,
            self.f_min,
            self.f_max,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("scan parameters must be finite"));
        }
        if self.f_step <= 0.0 {
            return Err(Error::invalid("frequency step must be > 0"));
        }
        if self.f_start > self.f_end {
            return Err(Error::invalid("start frequency above end frequency"));
        }
        if self.n_average == 0 {
            return Err(Error::invalid("n_average must be >= 1"));
        }
        if self.excitation_amplitude < 0.0 {
            return Err(Error::invalid("excitation amplitude must be >= 0"));
        }
        if !(self.f_min > 0.0 && self.f_min <= self.f_max) {
            return Err(Error::invalid("frequency policy range is empty"));
        }
        for f in [self.f_start, self.f_end] {
            self.check_policy(f)?;
        }
        Ok(())
    }

    fn check_policy(&self, f: f64) -> Result<()> {
        if f < self.f_min || f > self.f_max {
            return Err(Error::invalid(format!(
                "{f} Hz outside the allowed range {}..{} Hz",
                self.f_min, self.f_max
            )));
        }
        Ok(())
    }

    /// `f_start, f_start + f_step, …` up to `f_end`.
    pub fn frequencies(&self) -> Vec<f64> {
        let count = ((self.f_end - self.f_start) / self.f_step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| self.f_start + k as f64 * self.f_step)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EisPoint {
    pub frequency: f64,
    pub impedance_magnitude: f64,
    /// Degrees in `[-180, 180)`.
    pub phase: f64,
    pub v_rms: f64,
    pub i_rms: f64,
    pub samples_per_cycle: usize,
    /// An amplifier output or ADC sample hit a rail.
    pub clipped: bool,
}

/// One acquisition and analysis at frequency `f`, averaged over
/// `params.n_average` independently seeded repetitions.
pub fn eis_measure_point(
    f: f64,
    params: &EisScanParams,
    cell: &CellNetwork,
    cfg: &InstrumentConfig,
    seed: u64,
) -> Result<EisPoint> {
    params.validate()?;
    params.check_policy(f)?;
    cfg.validate()?;
    cell.validate()?;

    let reps = (0..params.n_average)
        .map(|r| measure_once(f, params, cell, cfg, derive_seed(seed, r as u64)))
        .collect::<Result<Vec<_>>>()?;
    if reps.len() == 1 {
        return Ok(reps[0]);
    }
    let n = reps.len() as f64;
    let v_rms = reps.iter().map(|p| p.v_rms).sum::<f64>() / n;
    let i_rms = reps.iter().map(|p| p.i_rms).sum::<f64>() / n;
    let phases: Vec<f64> = reps.iter().map(|p| p.phase).collect();
    Ok(EisPoint {
        frequency: f,
        impedance_magnitude: v_rms / i_rms,
        phase: circular_mean_deg(&phases)?,
        v_rms,
        i_rms,
        samples_per_cycle: reps[0].samples_per_cycle,
        clipped: reps.iter().any(|p| p.clipped),
    })
}

fn measure_once(
    f: f64,
    params: &EisScanParams,
    cell: &CellNetwork,
    cfg: &InstrumentConfig,
    seed: u64,
) -> Result<EisPoint> {
    let fe = &cfg.frontend;
    let (rate, n) = select_sample_rate(f, cfg.adc.max_sample_rate)?;
    let tau = settling_time_constant(cell)?;
    let auto = if tau.is_finite() {
        (5.0 * tau * f).ceil().min(MAX_SETTLE_CYCLES as f64) as usize
    } else {
        MAX_SETTLE_CYCLES
    };
    let settle = params.settle_cycles.max(auto);

    // one spare cycle so the skewed current samples stay inside the record
    let cycles = settle + ANALYSIS_CYCLES + 1;
    let dac = dac_sine(
        &cfg.dac,
        f,
        params.excitation_amplitude * fe.control_attenuation,
        fe.virtual_ground,
        cycles as f64,
        rate,
    )?;
    let out = drive_cell(fe, cell, &dac.waveform(), seed, InitialState::Equilibrium)?;

    let skew = cfg.adc.eis_mux_skew;
    let t0 = (settle * n) as f64 / rate;
    let acq = adc_acquire(
        &cfg.adc,
        &out.electrometer,
        &out.tia,
        rate,
        t0,
        ANALYSIS_CYCLES * n,
        skew,
    )?;

    let flat = |c: &[u16]| c.iter().all(|&x| x == c[0]);
    if flat(&acq.voltage.counts) || flat(&acq.current.counts) {
        return Err(Error::OpenCircuit { frequency: f });
    }
    let v = remove_dc(&acq.voltage.volts(&cfg.adc))?;
    let i = remove_dc(&acq.current.volts(&cfg.adc))?;
    let v_rms = rms(&v)? / fe.electrometer_gain.abs();
    let i_rms = tia_volts_to_current(rms(&i)?, fe.tia_feedback_resistance)?;
    if i_rms == 0.0 || v_rms == 0.0 {
        return Err(Error::OpenCircuit { frequency: f });
    }

    let k = cross_correlate_lag(&v, &i, n)?;
    let mut phase = lag_to_phase(k, n);
    if params.compensate_skew {
        phase = compensate_mux_phase(phase, f, skew);
    }

    Ok(EisPoint {
        frequency: f,
        impedance_magnitude: v_rms / i_rms,
        phase,
        v_rms,
        i_rms,
        samples_per_cycle: n,
        clipped: out.saturated || acq.clipped,
    })
}

/// How sweep points are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Points in parallel when built with the `parallel` feature.
    #[default]
    Parallel,
    Sequential,
}

/// Frequency sweep; points are returned in ascending frequency.
pub fn eis_scan(
    params: &EisScanParams,
    cell: &CellNetwork,
    cfg: &InstrumentConfig,
    seed: u64,
) -> Result<Vec<EisPoint>> {
    eis_scan_with(params, cell, cfg, seed, Execution::Parallel)
}

pub fn eis_scan_with(
    params: &EisScanParams,
    cell: &CellNetwork,
    cfg: &InstrumentConfig,
    seed: u64,
    exec: Execution,
) -> Result<Vec<EisPoint>> {
    params.validate()?;
    cfg.validate()?;
    cell.validate()?;
    let freqs = params.frequencies();
    let point = |k: usize| {
        let f = freqs[k];
        eis_measure_point(f, params, cell, cfg, derive_seed(seed, k as u64)).map_err(|e| {
            Error::PointFailed {
                frequency: f,
                source: Box::new(e),
            }
        })
    };
    let results: Vec<Result<EisPoint>> = match exec {
        Execution::Parallel => (0..freqs.len()).into_par_iter().map(point).collect(),
        Execution::Sequential => (0..freqs.len()).map(point).collect(),
    };
    results.into_iter().collect()
}

/// `trials` independent measurements of one point, seeded `derive_seed(seed, t)`.
pub fn eis_repeat(
    f: f64,
    params: &EisScanParams,
    cell: &CellNetwork,
    cfg: &InstrumentConfig,
    seed: u64,
    trials: usize,
) -> Result<Vec<EisPoint>> {
    (0..trials)
        .into_par_iter()
        .map(|t| eis_measure_point(f, params, cell, cfg, derive_seed(seed, t as u64)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}
