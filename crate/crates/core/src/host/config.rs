//! Instrument configuration files.
//!
//! One `key = value` per line; `#` starts a comment. Numbers accept SI
//! suffixes (`10k`, `653u`). Recognised keys:
//!
//! ```text
//! frontend.tia_feedback_resistance   frontend.control_attenuation
//! frontend.electrometer_gain         frontend.electrometer_offset
//! frontend.tia_offset                frontend.gain_error_electrometer
//! frontend.gain_error_tia            frontend.noise_sigma
//! frontend.rail_low                  frontend.rail_high
//! frontend.virtual_ground
//! adc.v_ref   adc.max_sample_rate   adc.eis_mux_skew   adc.cv_mux_skew
//! dac.full_scale
//! cell.<name> = (series (r 560) (parallel (r 10k) (c 33n)))
//! ```

use crate::cell::{parse_cell, CellNetwork};
use crate::dsp::InstrumentConfig;
use crate::error::{Error, Result};
use crate::units::parse_si;

pub const CONFIG_KEYS: &[&str] = &[
    "frontend.tia_feedback_resistance",
    "frontend.control_attenuation",
    "frontend.electrometer_gain",
    "frontend.electrometer_offset",
    "frontend.tia_offset",
    "frontend.gain_error_electrometer",
    "frontend.gain_error_tia",
    "frontend.noise_sigma",
    "frontend.rail_low",
    "frontend.rail_high",
    "frontend.virtual_ground",
    "adc.v_ref",
    "adc.max_sample_rate",
    "adc.eis_mux_skew",
    "adc.cv_mux_skew",
    "dac.full_scale",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigFile {
    pub instrument: InstrumentConfig,
    /// Named cells, in file order.
    pub cells: Vec<(String, CellNetwork)>,
}

impl ConfigFile {
    pub fn cell(&self, name: &str) -> Option<&CellNetwork> {
        self.cells.iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }
}

/// Sets one numeric instrument parameter by its dotted key.
pub fn set_config_value(cfg: &mut InstrumentConfig, key: &str, value: &str) -> Result<()> {
    let v = parse_si(value)?;
    let slot = match key {
        "frontend.tia_feedback_resistance" => &mut cfg.frontend.tia_feedback_resistance,
        "frontend.control_attenuation" => &mut cfg.frontend.control_attenuation,
        "frontend.electrometer_gain" => &mut cfg.frontend.electrometer_gain,
        "frontend.electrometer_offset" => &mut cfg.frontend.electrometer_offset,
        "frontend.tia_offset" => &mut cfg.frontend.tia_offset,
        "frontend.gain_error_electrometer" => &mut cfg.frontend.gain_error_electrometer,
        "frontend.gain_error_tia" => &mut cfg.frontend.gain_error_tia,
        "frontend.noise_sigma" => &mut cfg.frontend.noise_sigma,
        "frontend.rail_low" => &mut cfg.frontend.rail_low,
        "frontend.rail_high" => &mut cfg.frontend.rail_high,
        "frontend.virtual_ground" => &mut cfg.frontend.virtual_ground,
        "adc.v_ref" => &mut cfg.adc.v_ref,
        "adc.max_sample_rate" => &mut cfg.adc.max_sample_rate,
        "adc.eis_mux_skew" => &mut cfg.adc.eis_mux_skew,
        "adc.cv_mux_skew" => &mut cfg.adc.cv_mux_skew,
        "dac.full_scale" => &mut cfg.dac.full_scale,
        _ => return Err(Error::InvalidConfig(format!("unknown key {key:?}"))),
    };
    *slot = v;
    Ok(())
}

/// Parses a config file on top of `base`; the result is validated.
pub fn parse_config(text: &str, base: InstrumentConfig) -> Result<ConfigFile> {
    let mut out = ConfigFile {
        instrument: base,
        cells: Vec::new(),
    };
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(line_no, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if let Some(name) = key.strip_prefix("cell.") {
            if name.is_empty() {
                return Err(Error::parse(line_no, "cell name missing"));
            }
            let cell = parse_cell(value).map_err(|e| Error::parse(line_no, e.to_string()))?;
            out.cells.retain(|(n, _)| n != name);
            out.cells.push((name.to_string(), cell));
        } else {
            set_config_value(&mut out.instrument, key, value)
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
        }
    }
    out.instrument.validate()?;
    Ok(out)
}
