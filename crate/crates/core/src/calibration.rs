//! Channel offset calibration and per-frequency phase / magnitude correction.
//!
//! Tables persist as tab-separated text:
//!
//! ```text
//! [offsets]
//! electrometer_offset<TAB>0.0025
//! tia_offset<TAB>-0.001
//! [phase_offsets]
//! 100<TAB>1
//! 1000<TAB>3
//! [gain_points]
//! 1000<TAB>935.29
//! ```
//!
//! Phase rows are `frequency_hz<TAB>offset_deg`; gain rows are
//! `true_ohms<TAB>measured_ohms`. Numbers use the shortest text that parses back
//! to the same `f64`. Lines end in LF; empty sections may be omitted.

use std::path::Path;

use crate::convert::{adc_acquire, AdcConfig};
use crate::dsp::{mean, CvPoint, EisPoint};
use crate::error::{Error, Result};
use crate::frontend::{idle_outputs, FrontEndConfig};
use crate::fsutil::write_atomic;
use crate::signal::wrap_degrees;

/// Samples averaged per channel during offset calibration.
pub const CALIBRATION_SAMPLES: usize = 1024;
const CALIBRATION_RATE: f64 = 100e3;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CalibrationTable {
    pub electrometer_offset: f64,
    pub tia_offset: f64,
    /// `(frequency, offset_deg)`, frequencies strictly increasing.
    pub phase_offsets: Vec<(f64, f64)>,
    /// `(true_ohms, measured_ohms)`, both strictly increasing.
    pub gain_points: Vec<(f64, f64)>,
}

impl CalibrationTable {
    pub fn new(
        electrometer_offset: f64,
        tia_offset: f64,
        phase_offsets: Vec<(f64, f64)>,
        gain_points: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let t = CalibrationTable {
            electrometer_offset,
            tia_offset,
            phase_offsets,
            gain_points,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.electrometer_offset.is_finite() && self.tia_offset.is_finite()) {
            return Err(Error::invalid("offsets must be finite"));
        }
        let finite = |v: &[(f64, f64)]| v.iter().all(|(a, b)| a.is_finite() && b.is_finite());
        if !finite(&self.phase_offsets) || !finite(&self.gain_points) {
            return Err(Error::invalid("calibration points must be finite"));
        }
        if !self.phase_offsets.windows(2).all(|w| w[0].0 < w[1].0) {
            return Err(Error::invalid(
                "phase offset frequencies must be strictly increasing",
            ));
        }
        if self.gain_points.iter().any(|&(t, m)| t <= 0.0 || m <= 0.0) {
            return Err(Error::invalid("gain points must be positive"));
        }
        if !self
            .gain_points
            .windows(2)
            .all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1)
        {
            return Err(Error::invalid(
                "gain points must be strictly increasing in both true and measured ohms",
            ));
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.phase_offsets.iter().all(|&(_, d)| d == 0.0)
            && self.gain_points.iter().all(|&(t, m)| t == m)
    }

    /// Interpolated phase offset at `f`, held flat beyond the end points.
    pub fn phase_offset_at(&self, f: f64) -> f64 {
        interpolate(&self.phase_offsets, f).unwrap_or(0.0)
    }

    /// Measured magnitude mapped to true magnitude.
    ///
    /// Between nodes the map is linear; outside it keeps the ratio of the
    /// nearest end node, so swapping the columns gives the exact inverse map.
    pub fn correct_magnitude(&self, measured: f64) -> f64 {
        let g = &self.gain_points;
        match g.len() {
            0 => measured,
            _ if measured <= g[0].1 => measured * g[0].0 / g[0].1,
            n if measured >= g[n - 1].1 => measured * g[n - 1].0 / g[n - 1].1,
            _ => {
                let swapped: Vec<(f64, f64)> = g.iter().map(|&(t, m)| (m, t)).collect();
                interpolate(&swapped, measured).expect("non-empty table")
            }
        }
    }

    /// Table undoing this one's corrections.
    pub fn inverse(&self) -> CalibrationTable {
        CalibrationTable {
            electrometer_offset: -self.electrometer_offset,
            tia_offset: -self.tia_offset,
            phase_offsets: self.phase_offsets.iter().map(|&(f, d)| (f, -d)).collect(),
            gain_points: self.gain_points.iter().map(|&(t, m)| (m, t)).collect(),
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("[offsets]\n");
        s += &format!("electrometer_offset\t{}\n", self.electrometer_offset);
        s += &format!("tia_offset\t{}\n", self.tia_offset);
        s += "[phase_offsets]\n";
        for (f, d) in &self.phase_offsets {
            s += &format!("{f}\t{d}\n");
        }
        s += "[gain_points]\n";
        for (t, m) in &self.gain_points {
            s += &format!("{t}\t{m}\n");
        }
        s
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        #[derive(PartialEq)]
        enum Section {
            None,
            Offsets,
            Phase,
            Gain,
        }
        let mut section = Section::None;
        let mut table = CalibrationTable::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() {
                continue;
            }
            match line.trim() {
                "[offsets]" => {
                    section = Section::Offsets;
                    continue;
                }
                "[phase_offsets]" => {
                    section = Section::Phase;
                    continue;
                }
                "[gain_points]" => {
                    section = Section::Gain;
                    continue;
                }
                h if h.starts_with('[') => {
                    return Err(Error::parse(line_no, format!("unknown section {h}")));
                }
                _ => {}
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 {
                return Err(Error::parse(line_no, "expected two tab-separated fields"));
            }
            let num = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(line_no, format!("bad number {s:?}")))
            };
            match section {
                Section::None => {
                    return Err(Error::parse(line_no, "row before any section header"));
                }
                Section::Offsets => {
                    let v = num(fields[1])?;
                    match fields[0].trim() {
                        "electrometer_offset" => table.electrometer_offset = v,
                        "tia_offset" => table.tia_offset = v,
                        k => return Err(Error::parse(line_no, format!("unknown offset {k:?}"))),
                    }
                }
                Section::Phase => table.phase_offsets.push((num(fields[0])?, num(fields[1])?)),
                Section::Gain => table.gain_points.push((num(fields[0])?, num(fields[1])?)),
            }
        }
        table.validate()?;
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_tsv().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_tsv(&std::fs::read_to_string(path)?)
    }
}

/// Piecewise-linear lookup in `(x, y)` nodes, clamped at the ends.
fn interpolate(nodes: &[(f64, f64)], x: f64) -> Option<f64> {
    let (first, last) = (nodes.first()?, nodes.last()?);
    if x <= first.0 {
        return Some(first.1);
    }
    if x >= last.0 {
        return Some(last.1);
    }
    let i = nodes.partition_point(|&(xi, _)| xi <= x);
    let (x0, y0) = nodes[i - 1];
    let (x1, y1) = nodes[i];
    Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
}

/// Measures both channel offsets with the cell disconnected.
///
/// Returns the mean deviation of each channel from the nominal virtual ground
/// over [`CALIBRATION_SAMPLES`] samples.
pub fn calibrate_offsets(fe: &FrontEndConfig, adc: &AdcConfig, seed: u64) -> Result<(f64, f64)> {
    let n = CALIBRATION_SAMPLES;
    let out = idle_outputs(fe, CALIBRATION_RATE, n, seed)?;
    let acq = adc_acquire(
        adc,
        &out.electrometer,
        &out.tia,
        CALIBRATION_RATE.min(adc.max_sample_rate),
        0.0,
        n,
        0.0,
    )?;
    if out.saturated || acq.clipped {
        return Err(Error::CalibrationFailed(
            "an amplifier output saturated with zero excitation".into(),
        ));
    }
    let e = mean(&acq.voltage.volts(adc))? - fe.virtual_ground;
    let t = mean(&acq.current.volts(adc))? - fe.virtual_ground;
    Ok((e, t))
}

/// Phase and magnitude correction of one impedance point.
pub fn apply_calibration(table: &CalibrationTable, point: &EisPoint) -> EisPoint {
    let phase = wrap_degrees(point.phase - table.phase_offset_at(point.frequency));
    let magnitude = table.correct_magnitude(point.impedance_magnitude);
    EisPoint {
        phase,
        impedance_magnitude: magnitude,
        i_rms: point.v_rms / magnitude,
        ..*point
    }
}

/// Removes the channel offsets from CV readings.
pub fn apply_cv_calibration(
    table: &CalibrationTable,
    fe: &FrontEndConfig,
    points: &[CvPoint],
) -> Vec<CvPoint> {
    let dv = table.electrometer_offset / fe.electrometer_gain;
    let di = table.tia_offset / fe.tia_feedback_resistance;
    points
        .iter()
        .map(|p| CvPoint {
            time: p.time,
            voltage: p.voltage - dv,
            current: p.current + di,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(f: f64, mag: f64, phase: f64) -> EisPoint {
        EisPoint {
            frequency: f,
            impedance_magnitude: mag,
            phase,
            v_rms: 0.035,
            i_rms: 0.035 / mag,
            samples_per_cycle: 360,
            clipped: false,
        }
    }

    #[test]
    fn empty_table_is_identity() {
        let t = CalibrationTable::default();
        let p = point(1234.0, 987.6, -12.5);
        assert_eq!(apply_calibration(&t, &p), p);
        assert!(t.is_identity());
    }

    #[test]
    fn phase_interpolation() {
        let t = CalibrationTable::new(0.0, 0.0, vec![(100.0, 1.0), (1000.0, 3.0)], vec![]).unwrap();
        let p = apply_calibration(&t, &point(550.0, 1e3, 0.0));
        assert!((p.phase + 2.0).abs() < 1e-12);
        assert_eq!(t.phase_offset_at(10.0), 1.0);
        assert_eq!(t.phase_offset_at(1e5), 3.0);
    }

    #[test]
    fn gain_correction() {
        let t = CalibrationTable::new(0.0, 0.0, vec![], vec![(1000.0, 935.29), (5000.0, 4586.21)])
            .unwrap();
        let p = apply_calibration(&t, &point(9920.0, 935.29, 0.0));
        assert!((p.impedance_magnitude - 1000.0).abs() < 1e-9);
        assert!((p.impedance_magnitude - p.v_rms / p.i_rms).abs() < 1e-9);
        // midway between nodes
        let mid = t.correct_magnitude((935.29 + 4586.21) / 2.0);
        assert!((mid - 3000.0).abs() < 1e-9);
    }

    #[test]
    fn inverse_recovers_original() {
        let t = CalibrationTable::new(
            0.002,
            -0.001,
            vec![(100.0, 1.0), (1000.0, 3.0), (20e3, -2.0)],
            vec![(1000.0, 935.29), (5000.0, 4586.21), (10e3, 9700.0)],
        )
        .unwrap();
        let inv = t.inverse();
        for &(f, m, ph) in &[
            (50.0, 300.0, 10.0),
            (550.0, 935.29, -30.0),
            (3e3, 2500.0, 179.5),
            (15e3, 7000.0, -179.5),
            (40e3, 20e3, 0.0),
        ] {
            let p = point(f, m, ph);
            let back = apply_calibration(&inv, &apply_calibration(&t, &p));
            assert!((back.impedance_magnitude - m).abs() <= 1e-9 * m);
            assert!(wrap_degrees(back.phase - ph).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_unsorted() {
        assert!(CalibrationTable::new(0.0, 0.0, vec![(1e3, 0.0), (1e2, 0.0)], vec![]).is_err());
        assert!(CalibrationTable::new(0.0, 0.0, vec![], vec![(1e3, 900.0), (2e3, 800.0)]).is_err());
        assert!(CalibrationTable::new(0.0, 0.0, vec![], vec![(-1.0, 1.0)]).is_err());
    }

    #[test]
    fn tsv_roundtrip_and_format() {
        let t = CalibrationTable::new(
            0.0025,
            -0.001,
            vec![(100.0, 1.0), (1000.0, 3.0)],
            vec![(1000.0, 935.29)],
        )
        .unwrap();
        let text = t.to_tsv();
        assert_eq!(
            text,
            "[offsets]\nelectrometer_offset\t0.0025\ntia_offset\t-0.001\n\
             [phase_offsets]\n100\t1\n1000\t3\n[gain_points]\n1000\t935.29\n"
        );
        assert_eq!(CalibrationTable::from_tsv(&text).unwrap(), t);
    }

    #[test]
    fn tsv_errors_carry_line_numbers() {
        let err = CalibrationTable::from_tsv("[offsets]\ntia_offset\tabc\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = CalibrationTable::from_tsv("1\t2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = CalibrationTable::from_tsv("[bogus]\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn zero_offsets_within_half_lsb() {
        let (e, t) =
            calibrate_offsets(&FrontEndConfig::default(), &AdcConfig::default(), 0).unwrap();
        // 1.65 V sits on a code boundary and rounds up by half an LSB
        let half = 3.3 / 4095.0 / 2.0 + 1e-12;
        assert!(e.abs() <= half && t.abs() <= half);
    }

    #[test]
    fn injected_offset_recovered() {
        let fe = FrontEndConfig {
            tia_offset: 5e-3,
            ..Default::default()
        };
        let (e, t) = calibrate_offsets(&fe, &AdcConfig::default(), 0).unwrap();
        let half = 3.3 / 4095.0 / 2.0 + 1e-12;
        assert!((t - 5e-3).abs() <= half);
        assert!(e.abs() <= half);
    }

    #[test]
    fn noisy_offset_standard_error() {
        let fe = FrontEndConfig {
            noise_sigma: 1e-3,
            ..Default::default()
        };
        let bound = 3.0 * 1e-3 / (CALIBRATION_SAMPLES as f64).sqrt();
        let hits = (0..200)
            .filter(|&s| {
                let (e, t) = calibrate_offsets(&fe, &AdcConfig::default(), s).unwrap();
                e.abs() <= bound && t.abs() <= bound
            })
            .count();
        assert!(hits >= 196, "{hits}/200 within 3 sigma");
    }

    #[test]
    fn saturation_fails_calibration() {
        let fe = FrontEndConfig {
            tia_offset: 2.0,
            ..Default::default()
        };
        assert!(matches!(
            calibrate_offsets(&fe, &AdcConfig::default(), 0),
            Err(Error::CalibrationFailed(_))
        ));
    }

    #[test]
    fn cv_offsets_removed() {
        let fe = FrontEndConfig::default();
        let t = CalibrationTable::new(0.01, -0.02, vec![], vec![]).unwrap();
        let out = apply_cv_calibration(
            &t,
            &fe,
            &[CvPoint {
                time: 0.0,
                voltage: 0.11,
                current: 2e-6,
            }],
        );
        assert!((out[0].voltage - 0.1).abs() < 1e-15);
        assert!((out[0].current - 0.0).abs() < 1e-15);
    }
}
