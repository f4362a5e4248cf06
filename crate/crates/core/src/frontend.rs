//! Control amplifier, electrometer and transimpedance amplifier around a
//! single-supply virtual ground, plus the working-electrode multiplexer.

use rand_distr::{Distribution, Normal};

use crate::cell::{time_domain_current, CellNetwork, InitialState};
use crate::error::{Error, Result};
use crate::signal::{stream_rng, Waveform};

const ELECTROMETER_STREAM: u64 = 1;
const TIA_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontEndConfig {
    pub tia_feedback_resistance: f64,
    /// Cell voltage = (DAC voltage − virtual ground) / attenuation.
    pub control_attenuation: f64,
    pub electrometer_gain: f64,
    pub electrometer_offset: f64,
    pub tia_offset: f64,
    pub gain_error_electrometer: f64,
    pub gain_error_tia: f64,
    /// RMS of additive white Gaussian noise on each output, volts.
    pub noise_sigma: f64,
    pub rail_low: f64,
    pub rail_high: f64,
    pub virtual_ground: f64,
}

impl Default for FrontEndConfig {
    fn default() -> Self {
        FrontEndConfig {
            tia_feedback_resistance: 10e3,
            control_attenuation: 2.5,
            electrometer_gain: 1.0,
            electrometer_offset: 0.0,
            tia_offset: 0.0,
            gain_error_electrometer: 1.0,
            gain_error_tia: 1.0,
            noise_sigma: 0.0,
            rail_low: 0.0,
            rail_high: 3.3,
            virtual_ground: 1.65,
        }
    }
}

impl FrontEndConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        let all_finite = [
            self.tia_feedback_resistance,
            self.control_attenuation,
            self.electrometer_gain,
            self.electrometer_offset,
            self.tia_offset,
            self.gain_error_electrometer,
            self.gain_error_tia,
            self.noise_sigma,
            self.rail_low,
            self.rail_high,
            self.virtual_ground,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return bad("front-end parameters must be finite");
        }
        if self.tia_feedback_resistance <= 0.0 {
            return bad("TIA feedback resistance must be > 0");
        }
        if self.control_attenuation <= 0.0 {
            return bad("control attenuation must be > 0");
        }
        if self.electrometer_gain == 0.0 {
            return bad("electrometer gain must be non-zero");
        }
        if !(self.rail_low < self.virtual_ground && self.virtual_ground < self.rail_high) {
            return bad("virtual ground must lie strictly between the rails");
        }
        if self.noise_sigma < 0.0 {
            return bad("noise sigma must be >= 0");
        }
        Ok(())
    }
}

/// Selects which working electrode's cell the front-end is wired to.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectrodeMux {
    cells: Vec<CellNetwork>,
    selected: usize,
}

impl ElectrodeMux {
    pub const MAX_CHANNELS: usize = 10;

    pub fn new(cells: Vec<CellNetwork>) -> Result<Self> {
        if cells.is_empty() || cells.len() > Self::MAX_CHANNELS {
            return Err(Error::InvalidConfig(format!(
                "mux needs 1..={} channels, got {}",
                Self::MAX_CHANNELS,
                cells.len()
            )));
        }
        for c in &cells {
            c.validate()?;
        }
        Ok(ElectrodeMux { cells, selected: 0 })
    }

    pub fn channel_count(&self) -> usize {
        self.cells.len()
    }

    pub fn selected(&self) -> usize {
        self.selected
    }

    pub fn cell(&self) -> &CellNetwork {
        &self.cells[self.selected]
    }

    pub fn cells(&self) -> &[CellNetwork] {
        &self.cells
    }
}

pub fn select_working_electrode(mux: &ElectrodeMux, channel: usize) -> Result<ElectrodeMux> {
    if channel >= mux.channel_count() {
        return Err(Error::InvalidChannel {
            channel,
            count: mux.channel_count(),
        });
    }
    Ok(ElectrodeMux {
        cells: mux.cells.clone(),
        selected: channel,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveOutput {
    pub electrometer: Waveform,
    pub tia: Waveform,
    /// Any output sample was clamped to a rail.
    pub saturated: bool,
}

/// Drives `cell` from the DAC voltage `dac` and returns both amplifier outputs on
/// the same time grid.
pub fn drive_cell(
    cfg: &FrontEndConfig,
    cell: &CellNetwork,
    dac: &Waveform,
    seed: u64,
    initial: InitialState,
) -> Result<DriveOutput> {
    cfg.validate()?;
    if dac.is_empty() {
        return Err(Error::invalid("empty DAC waveform"));
    }
    let v_cell = dac.map(|v| (v - cfg.virtual_ground) / cfg.control_attenuation);
    let current = time_domain_current(cell, &v_cell, initial)?;
    Ok(output_stage(cfg, &v_cell, &current, seed))
}

/// Amplifier outputs with the cell disconnected: zero cell voltage and current.
pub fn idle_outputs(cfg: &FrontEndConfig, rate: f64, n: usize, seed: u64) -> Result<DriveOutput> {
    cfg.validate()?;
    let zero = Waveform::new(0.0, rate, vec![0.0; n])?;
    Ok(output_stage(cfg, &zero, &zero, seed))
}

fn output_stage(cfg: &FrontEndConfig, v_cell: &Waveform, i: &Waveform, seed: u64) -> DriveOutput {
    let mut saturated = false;
    let mut clamp = |v: f64| {
        if v < cfg.rail_low {
            saturated = true;
            cfg.rail_low
        } else if v > cfg.rail_high {
            saturated = true;
            cfg.rail_high
        } else {
            v
        }
    };

    let mut e_noise = noise_source(cfg.noise_sigma, seed, ELECTROMETER_STREAM);
    let mut t_noise = noise_source(cfg.noise_sigma, seed, TIA_STREAM);
    let e_scale = cfg.gain_error_electrometer * cfg.electrometer_gain;
    let t_scale = cfg.gain_error_tia * cfg.tia_feedback_resistance;

    let electrometer: Vec<f64> = v_cell
        .samples
        .iter()
        .map(|&v| clamp(cfg.virtual_ground + e_scale * v + cfg.electrometer_offset + e_noise()))
        .collect();
    let tia: Vec<f64> = i
        .samples
        .iter()
        .map(|&a| clamp(cfg.virtual_ground - t_scale * a + cfg.tia_offset + t_noise()))
        .collect();

    DriveOutput {
        electrometer: Waveform {
            t0: v_cell.t0,
            rate: v_cell.rate,
            samples: electrometer,
        },
        tia: Waveform {
            t0: i.t0,
            rate: i.rate,
            samples: tia,
        },
        saturated,
    }
}

/// Sample generator for one output; draws nothing when noise is off.
fn noise_source(sigma: f64, seed: u64, stream: u64) -> impl FnMut() -> f64 {
    let mut state = (sigma > 0.0).then(|| {
        (
            stream_rng(seed, stream),
            Normal::new(0.0, sigma).expect("sigma validated"),
        )
    });
    move || match state.as_mut() {
        Some((rng, dist)) => dist.sample(rng),
        None => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::cell::impedance_at;

    fn dc(v: f64, n: usize) -> Waveform {
        Waveform::new(0.0, 1e4, vec![v; n]).unwrap()
    }

    fn sine(f: f64, rate: f64, n: usize, amp: f64) -> Waveform {
        Waveform::new(
            0.0,
            rate,
            (0..n)
                .map(|k| 1.65 + amp * (2.0 * PI * f * k as f64 / rate).sin())
                .collect(),
        )
        .unwrap()
    }

    fn rms_centered(x: &[f64], c: f64) -> f64 {
        (x.iter().map(|v| (v - c).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn ohms_law_dc() {
        let cfg = FrontEndConfig::default();
        let out = drive_cell(
            &cfg,
            &CellNetwork::resistor(1e3),
            &dc(1.65 + 0.25, 8),
            0,
            InitialState::Rest,
        )
        .unwrap();
        for (&e, &t) in out.electrometer.samples.iter().zip(&out.tia.samples) {
            assert!((e - 1.75).abs() < 1e-12);
            assert!((t - 0.65).abs() < 1e-12);
        }
        assert!(!out.saturated);
    }

    #[test]
    fn zero_excitation_sits_on_virtual_ground() {
        let cfg = FrontEndConfig::default();
        let cell = CellNetwork::parallel_rc(1e3, 10e-9);
        let out = drive_cell(&cfg, &cell, &dc(1.65, 100), 3, InitialState::Rest).unwrap();
        assert!(out.electrometer.samples.iter().all(|&v| v == 1.65));
        assert!(out.tia.samples.iter().all(|&v| v == 1.65));
    }

    #[test]
    fn resistor_tia_is_inverted() {
        let cfg = FrontEndConfig::default();
        let out = drive_cell(
            &cfg,
            &CellNetwork::resistor(10e3),
            &sine(1e3, 360e3, 720, 0.5),
            0,
            InitialState::Rest,
        )
        .unwrap();
        for (&e, &t) in out.electrometer.samples.iter().zip(&out.tia.samples) {
            assert!(((e - 1.65) + (t - 1.65)).abs() < 1e-12);
        }
    }

    #[test]
    fn linearity() {
        let cfg = FrontEndConfig::default();
        let cell = CellNetwork::series([
            CellNetwork::resistor(560.0),
            CellNetwork::parallel_rc(10e3, 33e-9),
        ]);
        let a = drive_cell(
            &cfg,
            &cell,
            &sine(2e3, 360e3 * 2.0, 2000, 0.2),
            0,
            InitialState::Rest,
        )
        .unwrap();
        let b = drive_cell(
            &cfg,
            &cell,
            &sine(2e3, 360e3 * 2.0, 2000, 0.4),
            0,
            InitialState::Rest,
        )
        .unwrap();
        for (x, y) in [(&a.electrometer, &b.electrometer), (&a.tia, &b.tia)] {
            let peak = y
                .samples
                .iter()
                .map(|q| (q - 1.65).abs())
                .fold(0.0, f64::max);
            for (&p, &q) in x.samples.iter().zip(&y.samples) {
                let (p, q) = (p - 1.65, q - 1.65);
                assert!((2.0 * p - q).abs() <= 1e-9 * peak);
            }
        }
    }

    #[test]
    fn current_rms_matches_impedance() {
        let cfg = FrontEndConfig::default();
        let cell = CellNetwork::parallel_rc(10e3, 8.2e-9);
        let (f, per) = (10_080.0, 360usize);
        let n = per * 30;
        let out = drive_cell(
            &cfg,
            &cell,
            &sine(f, f * per as f64, n, 0.125),
            0,
            InitialState::Rest,
        )
        .unwrap();
        let tail = &out.tia.samples[n - per * 4..];
        let i_rms = rms_centered(tail, 1.65) / cfg.tia_feedback_resistance;
        let v_rms = 0.125 / 2.5 / 2f64.sqrt();
        let z = impedance_at(&cell, f).unwrap().magnitude();
        assert!((i_rms - v_rms / z).abs() / (v_rms / z) < 0.005);
    }

    #[test]
    fn rails_clamp_and_flag() {
        let cfg = FrontEndConfig::default();
        let out = drive_cell(
            &cfg,
            &CellNetwork::resistor(100.0),
            &dc(2.0, 4),
            0,
            InitialState::Rest,
        )
        .unwrap();
        assert!(out.saturated);
        assert!(out.tia.samples.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn noise_deterministic_and_independent() {
        let cfg = FrontEndConfig {
            noise_sigma: 1e-3,
            ..Default::default()
        };
        let a = idle_outputs(&cfg, 1e3, 4096, 42).unwrap();
        let b = idle_outputs(&cfg, 1e3, 4096, 42).unwrap();
        let c = idle_outputs(&cfg, 1e3, 4096, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.electrometer.samples, c.electrometer.samples);
        assert_ne!(a.electrometer.samples, a.tia.samples);
        let s = rms_centered(&a.electrometer.samples, 1.65);
        assert!((s - 1e-3).abs() < 1e-4);
    }

    #[test]
    fn config_validation() {
        let ok = FrontEndConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            FrontEndConfig {
                tia_feedback_resistance: 0.0,
                ..ok
            },
            FrontEndConfig {
                control_attenuation: -1.0,
                ..ok
            },
            FrontEndConfig {
                virtual_ground: 3.3,
                ..ok
            },
            FrontEndConfig {
                noise_sigma: -1e-3,
                ..ok
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn mux_selection() {
        let one = ElectrodeMux::new(vec![CellNetwork::resistor(1e3)]).unwrap();
        assert_eq!(select_working_electrode(&one, 0).unwrap(), one);
        let cells: Vec<_> = (1..=10)
            .map(|k| CellNetwork::resistor(k as f64 * 100.0))
            .collect();
        let ten = ElectrodeMux::new(cells).unwrap();
        let nine = select_working_electrode(&ten, 9).unwrap();
        assert_eq!(nine.selected(), 9);
        assert_eq!(nine.cell(), &CellNetwork::resistor(1000.0));
        assert!(matches!(
            select_working_electrode(&ten, 10),
            Err(Error::InvalidChannel {
                channel: 10,
                count: 10
            })
        ));
        assert!(ElectrodeMux::new(vec![]).is_err());
    }
}
