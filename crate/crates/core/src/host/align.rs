//! Pairs a reference spectrum with the nearest points of a denser one.

use super::dataset::{EisRow, ScanData, ScanDataset};
use super::metrics::{percent_error, phase_error};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignedPair {
    pub reference: EisRow,
    pub dense: EisRow,
    /// Dense magnitude against the reference, percent.
    pub percent_error: f64,
    /// Dense phase minus reference phase, degrees.
    pub phase_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentReport {
    pub pairs: Vec<AlignedPair>,
    pub max_abs_percent: f64,
    pub mean_abs_percent: f64,
    pub max_abs_phase: f64,
    pub mean_abs_phase: f64,
}

fn eis_rows<'a>(d: &'a ScanDataset, what: &str) -> Result<&'a [EisRow]> {
    match &d.data {
        ScanData::Eis(rows) if !rows.is_empty() => Ok(rows),
        ScanData::Eis(_) => Err(Error::invalid(format!("{what} dataset is empty"))),
        ScanData::Cv(_) => Err(Error::invalid(format!("{what} dataset is not an EIS scan"))),
    }
}

/// Nearest dense row for every reference row; equal distances pick the lower
/// frequency.
pub fn align_datasets(dense: &ScanDataset, reference: &ScanDataset) -> Result<AlignmentReport> {
    let d = eis_rows(dense, "dense")?;
    let r = eis_rows(reference, "reference")?;

    let mut pairs = Vec::with_capacity(r.len());
    for rr in r {
        let mut best = d[0];
        for cand in &d[1..] {
            let (dc, db) = (
                (cand.frequency - rr.frequency).abs(),
                (best.frequency - rr.frequency).abs(),
            );
            if dc < db || (dc == db && cand.frequency < best.frequency) {
                best = *cand;
            }
        }
        pairs.push(AlignedPair {
            reference: *rr,
            dense: best,
            percent_error: percent_error(best.impedance, rr.impedance)?,
            phase_error: phase_error(best.phase, rr.phase),
        });
    }

    let n = pairs.len() as f64;
    let abs_pct = pairs.iter().map(|p| p.percent_error.abs());
    let abs_ph = pairs.iter().map(|p| p.phase_error.abs());
    Ok(AlignmentReport {
        max_abs_percent: abs_pct.clone().fold(0.0, f64::max),
        mean_abs_percent: abs_pct.sum::<f64>() / n,
        max_abs_phase: abs_ph.clone().fold(0.0, f64::max),
        mean_abs_phase: abs_ph.sum::<f64>() / n,
        pairs,
    })
}
