//! Cyclic voltammetry: triangular DAC staircase, one (V, I) pair per step.

use super::InstrumentConfig;
use crate::cell::{CellNetwork, InitialState};
use crate::convert::{adc_acquire, dac_ramp, DacSignal};
use crate::error::{Error, Result};
use crate::frontend::drive_cell;

/// Simulation points per DAC step.
const OVERSAMPLE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvScanParams {
    /// Sweep rate across the cell, V/s.
    pub rate: f64,
    /// Cell voltages relative to the virtual ground.
    pub v_start: f64,
    pub v_end: f64,
    pub cycles: usize,
}

impl Default for CvScanParams {
    fn default() -> Self {
        CvScanParams {
            rate: 1.0,
            v_start: -0.5,
            v_end: 0.5,
            cycles: 1,
        }
    }
}

impl CvScanParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(Error::invalid(format!(
                "scan rate must be > 0, got {}",
                self.rate
            )));
        }
        if !(self.v_start.is_finite() && self.v_end.is_finite()) || self.v_start == self.v_end {
            return Err(Error::invalid(
                "scan needs distinct finite start and end voltages",
            ));
        }
        if self.cycles == 0 {
            return Err(Error::invalid("cycles must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvPoint {
    pub time: f64,
    /// Cell voltage, volts.
    pub voltage: f64,
    /// Cell current with the TIA inversion removed, amperes.
    pub current: f64,
}

/// Codes for `cycles` round trips start → end → start.
fn triangle(up: &DacSignal, cycles: usize) -> Vec<u16> {
    let fwd = &up.codes;
    let mut codes = fwd.clone();
    for c in 0..cycles {
        codes.extend(fwd.iter().rev().skip(1));
        if c + 1 < cycles {
            codes.extend(fwd.iter().skip(1));
        }
    }
    codes
}

pub fn cv_scan(
    params: &CvScanParams,
    cell: &CellNetwork,
    cfg: &InstrumentConfig,
    seed: u64,
) -> Result<Vec<CvPoint>> {
    params.validate()?;
    cfg.validate()?;
    cell.validate()?;
    let fe = &cfg.frontend;
    let att = fe.control_attenuation;

    let leg = dac_ramp(
        &cfg.dac,
        fe.virtual_ground,
        params.v_start * att,
        params.v_end * att,
        params.rate * att,
    )?;
    let mut dac = DacSignal {
        codes: triangle(&leg, params.cycles),
        ..leg
    };
    let steps = dac.codes.len();
    let rate = dac.update_rate;
    let skew = cfg.adc.cv_mux_skew;

    // hold the last code long enough for the delayed current samples
    let tail = (skew * rate).ceil() as usize + 1;
    let last = *dac.codes.last().expect("ramp has at least two codes");
    dac.codes.extend(std::iter::repeat_n(last, tail));

    let wave = dac.waveform_oversampled(OVERSAMPLE);
    let out = drive_cell(fe, cell, &wave, seed, InitialState::Equilibrium)?;
    let acq = adc_acquire(
        &cfg.adc,
        &out.electrometer,
        &out.tia,
        rate,
        0.0,
        steps,
        skew,
    )?;

    let vg = fe.virtual_ground;
    let rf = fe.tia_feedback_resistance;
    let gain = fe.electrometer_gain;
    Ok(acq
        .voltage
        .volts(&cfg.adc)
        .into_iter()
        .zip(acq.current.volts(&cfg.adc))
        .enumerate()
        .map(|(k, (v, i))| CvPoint {
            time: k as f64 / rate,
            voltage: (v - vg) / gain,
            current: -(i - vg) / rf,
        })
        .collect())
}

/// Least-squares line `y = slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("fit needs two or more paired points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DivisionByZero("fit abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Voltage at which the fitted current of the first sweep leg crosses zero.
pub fn zero_current_voltage(points: &[CvPoint]) -> Result<f64> {
    let leg = first_leg(points);
    let v: Vec<f64> = leg.iter().map(|p| p.voltage).collect();
    let i: Vec<f64> = leg.iter().map(|p| p.current).collect();
    let (slope, intercept) = linear_fit(&v, &i)?;
    if slope == 0.0 {
        return Err(Error::DivisionByZero("flat current trace".into()));
    }
    Ok(-intercept / slope)
}

/// Points up to the first turning point of the sweep.
pub fn first_leg(points: &[CvPoint]) -> &[CvPoint] {
    if points.len() < 3 {
        return points;
    }
    let up = points[points.len() / 4].voltage >= points[0].voltage;
    let turn = points
        .iter()
        .enumerate()
        .fold((0, points[0].voltage), |(bi, bv), (i, p)| {
            let better = if up { p.voltage > bv } else { p.voltage < bv };
            if better {
                (i, p.voltage)
            } else {
                (bi, bv)
            }
        })
        .0;
    &points[..=turn]
}
