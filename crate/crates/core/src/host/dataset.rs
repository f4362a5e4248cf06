//! Tab-separated scan files.
//!
//! ```text
//! # cell<TAB>R1k
//! # seed<TAB>0
//! frequency_hz<TAB>impedance_ohm<TAB>phase_deg
//! 9920<TAB>1003<TAB>-0.5
//! ```
//!
//! Metadata lines come first, then the header, then one row per point. CV files
//! use the header `time_s<TAB>voltage_v<TAB>current_a`. Numbers carry nine
//! significant digits, positional for exponents −4..=8 and `1.5e-5` style
//! otherwise. Lines end in LF.

use std::fmt;
use std::path::Path;

use crate::dsp::{CvPoint, EisPoint};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

pub const EIS_HEADER: &str = "frequency_hz\timpedance_ohm\tphase_deg";
pub const CV_HEADER: &str = "time_s\tvoltage_v\tcurrent_a";
pub const SIGNIFICANT_DIGITS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanKind {
    Eis,
    Cv,
}

impl fmt::Display for ScanKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScanKind::Eis => "EIS",
            ScanKind::Cv => "CV",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EisRow {
    pub frequency: f64,
    pub impedance: f64,
    pub phase: f64,
}

impl From<&EisPoint> for EisRow {
    fn from(p: &EisPoint) -> Self {
        EisRow {
            frequency: p.frequency,
            impedance: p.impedance_magnitude,
            phase: p.phase,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScanData {
    Eis(Vec<EisRow>),
    Cv(Vec<CvPoint>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanDataset {
    pub metadata: Vec<(String, String)>,
    pub data: ScanData,
}

impl ScanDataset {
    pub fn eis(rows: Vec<EisRow>) -> Self {
        ScanDataset {
            metadata: Vec::new(),
            data: ScanData::Eis(rows),
        }
    }

    pub fn cv(rows: Vec<CvPoint>) -> Self {
        ScanDataset {
            metadata: Vec::new(),
            data: ScanData::Cv(rows),
        }
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }

    pub fn kind(&self) -> ScanKind {
        match self.data {
            ScanData::Eis(_) => ScanKind::Eis,
            ScanData::Cv(_) => ScanKind::Cv,
        }
    }

    pub fn len(&self) -> usize {
        match &self.data {
            ScanData::Eis(r) => r.len(),
            ScanData::Cv(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// The same dataset with every value rounded as it would be on disk.
    pub fn rounded(&self) -> ScanDataset {
        let r = |v: f64| round_sig(v);
        let data = match &self.data {
            ScanData::Eis(rows) => ScanData::Eis(
                rows.iter()
                    .map(|e| EisRow {
                        frequency: r(e.frequency),
                        impedance: r(e.impedance),
                        phase: r(e.phase),
                    })
                    .collect(),
            ),
            ScanData::Cv(rows) => ScanData::Cv(
                rows.iter()
                    .map(|p| CvPoint {
                        time: r(p.time),
                        voltage: r(p.voltage),
                        current: r(p.current),
                    })
                    .collect(),
            ),
        };
        ScanDataset {
            metadata: self.metadata.clone(),
            data,
        }
    }

    fn rows(&self) -> Vec<[f64; 3]> {
        match &self.data {
            ScanData::Eis(rows) => rows
                .iter()
                .map(|e| [e.frequency, e.impedance, e.phase])
                .collect(),
            ScanData::Cv(rows) => rows
                .iter()
                .map(|p| [p.time, p.voltage, p.current])
                .collect(),
        }
    }

    pub fn to_tsv(&self) -> Result<String> {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            if k.is_empty() || k.contains(['\t', '\n', '\r']) || v.contains(['\t', '\n', '\r']) {
                return Err(Error::invalid(format!(
                    "metadata {k:?} may not contain tabs or line breaks"
                )));
            }
            out += &format!("# {k}\t{v}\n");
        }
        out += match self.kind() {
            ScanKind::Eis => EIS_HEADER,
            ScanKind::Cv => CV_HEADER,
        };
        out.push('\n');
        let rows = self.rows();
        for (i, row) in rows.iter().enumerate() {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("row {i} has a non-finite value")));
            }
            if i > 0 && round_sig(row[0]) <= round_sig(rows[i - 1][0]) {
                return Err(Error::invalid(format!(
                    "row {i}: first column must be strictly ascending"
                )));
            }
            out += &format!(
                "{}\t{}\t{}\n",
                format_sig(row[0]),
                format_sig(row[1]),
                format_sig(row[2])
            );
        }
        Ok(out)
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut metadata = Vec::new();
        let mut kind = None;
        let mut rows: Vec<[f64; 3]> = Vec::new();
        for (idx, line) in text.split_terminator('\n').enumerate() {
            let line_no = idx + 1;
            if kind.is_none() {
                if let Some(rest) = line.strip_prefix('#') {
                    let rest = rest.strip_prefix(' ').unwrap_or(rest);
                    let (k, v) = rest.split_once('\t').ok_or_else(|| {
                        Error::parse(line_no, "metadata line needs `# key<TAB>value`")
                    })?;
                    metadata.push((k.to_string(), v.to_string()));
                    continue;
                }
                kind = Some(match line {
                    EIS_HEADER => ScanKind::Eis,
                    CV_HEADER => ScanKind::Cv,
                    _ => return Err(Error::parse(line_no, format!("unknown header {line:?}"))),
                });
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    line_no,
                    format!("expected 3 tab-separated fields, found {}", fields.len()),
                ));
            }
            let mut row = [0.0; 3];
            for (slot, field) in row.iter_mut().zip(&fields) {
                *slot = field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(line_no, format!("bad number {field:?}")))?;
            }
            if let Some(prev) = rows.last() {
                if row[0] <= prev[0] {
                    return Err(Error::parse(
                        line_no,
                        "first column must be strictly ascending",
                    ));
                }
            }
            rows.push(row);
        }
        let data = match kind {
            None => {
                return Err(Error::parse(
                    text.lines().count() + 1,
                    "missing header line",
                ))
            }
            Some(ScanKind::Eis) => ScanData::Eis(
                rows.iter()
                    .map(|r| EisRow {
                        frequency: r[0],
                        impedance: r[1],
                        phase: r[2],
                    })
                    .collect(),
            ),
            Some(ScanKind::Cv) => ScanData::Cv(
                rows.iter()
                    .map(|r| CvPoint {
                        time: r[0],
                        voltage: r[1],
                        current: r[2],
                    })
                    .collect(),
            ),
        };
        Ok(ScanDataset { metadata, data })
    }
}

pub fn write_dataset(dataset: &ScanDataset, path: &Path) -> Result<()> {
    write_atomic(path, dataset.to_tsv()?.as_bytes())
}

pub fn read_dataset(path: &Path) -> Result<ScanDataset> {
    ScanDataset::from_tsv(&std::fs::read_to_string(path)?)
}

/// `v` rounded to nine significant digits.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v + 0.0;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v)
        .parse()
        .unwrap()
}

/// Nine significant digits with trailing zeros removed.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        let rounded: f64 = sci.parse().expect("round trip");
        trim_zeros(&format!("{rounded:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}
