//! File formats. Angles in files are degrees; phases are radians.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a value
//! read back is bit-identical to the value written.

use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::coding::BeamTarget;
use crate::error::{Error, Result};
use crate::farfield::{Pattern, PatternMetrics};
use crate::scenario::ThroughputReport;
use crate::surface::{PhaseProfile, StateMatrix, UnitCellGrid};

fn headerless_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader)
}

fn read_matrix<R: Read, T>(reader: R, parse: impl Fn(&str) -> Option<T>) -> Result<Array2<T>> {
    let mut rows = 0;
    let mut cols = None;
    let mut data = Vec::new();
    for record in headerless_reader(reader).records() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(Error::Format(format!(
                    "row {} has {} columns, expected {c}",
                    rows + 1,
                    record.len()
                )));
            }
            _ => {}
        }
        for field in record.iter() {
            data.push(parse(field).ok_or_else(|| {
                Error::Format(format!("row {}: cannot parse '{field}'", rows + 1))
            })?);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Format("matrix file is empty".into()))?;
    Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Format(e.to_string()))
}

fn write_matrix<W: Write, T: ToString>(writer: W, matrix: &Array2<T>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    for row in matrix.outer_iter() {
        w.write_record(row.iter().map(ToString::to_string))?;
    }
    w.flush()?;
    Ok(())
}

/// One integer state index per cell, rows along m.
pub fn write_state_matrix_csv<W: Write>(writer: W, states: &StateMatrix) -> Result<()> {
    write_matrix(writer, states.states())
}

pub fn read_state_matrix_csv<R: Read>(reader: R, n_states: usize) -> Result<StateMatrix> {
    StateMatrix::new(read_matrix(reader, |s| s.parse::<usize>().ok())?, n_states)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateMatrixDoc {
    n_states: usize,
    states: Vec<Vec<usize>>,
}

pub fn write_state_matrix_json<W: Write>(writer: W, states: &StateMatrix) -> Result<()> {
    let doc = StateMatrixDoc {
        n_states: states.n_states(),
        states: states.states().outer_iter().map(|r| r.to_vec()).collect(),
    };
    serde_json::to_writer_pretty(writer, &doc)?;
    Ok(())
}

pub fn read_state_matrix_json<R: Read>(reader: R) -> Result<StateMatrix> {
    let doc: StateMatrixDoc = serde_json::from_reader(reader)?;
    let cols = doc.states.first().map_or(0, Vec::len);
    if doc.states.iter().any(|r| r.len() != cols) || cols == 0 {
        return Err(Error::Format(
            "state rows must be non-empty and equally long".into(),
        ));
    }
    let rows = doc.states.len();
    let flat = doc.states.into_iter().flatten().collect();
    let states =
        Array2::from_shape_vec((rows, cols), flat).map_err(|e| Error::Format(e.to_string()))?;
    StateMatrix::new(states, doc.n_states)
}

/// Phase matrix in radians.
pub fn write_profile_csv<W: Write>(writer: W, profile: &PhaseProfile) -> Result<()> {
    write_matrix(writer, profile.phase())
}

pub fn read_profile_csv<R: Read>(reader: R, grid: UnitCellGrid) -> Result<PhaseProfile> {
    let phase = read_matrix(reader, |s| s.parse::<f64>().ok().filter(|x| x.is_finite()))?;
    grid.check_shape(phase.dim())?;
    PhaseProfile::new(grid, phase)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetDoc {
    theta_deg: f64,
    phi_deg: f64,
}

/// `[{"theta_deg": .., "phi_deg": ..}, ...]`.
pub fn read_targets_json<R: Read>(reader: R) -> Result<Vec<BeamTarget>> {
    let docs: Vec<TargetDoc> = serde_json::from_reader(reader)?;
    docs.iter()
        .map(|d| BeamTarget::from_degrees(d.theta_deg, d.phi_deg))
        .collect()
}

pub fn write_targets_json<W: Write>(writer: W, targets: &[BeamTarget]) -> Result<()> {
    let docs: Vec<TargetDoc> = targets
        .iter()
        .map(|t| TargetDoc {
            theta_deg: t.theta().to_degrees(),
            phi_deg: t.phi().to_degrees(),
        })
        .collect();
    serde_json::to_writer_pretty(writer, &docs)?;
    Ok(())
}

/// Columns `theta_deg, phi_deg, re, im, magnitude_db`; magnitude is relative to the peak.
pub fn write_pattern_csv<W: Write>(writer: W, pattern: &Pattern) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["theta_deg", "phi_deg", "re", "im", "magnitude_db"])?;
    let db = pattern.normalized_db();
    let angles = pattern.angles();
    for ((i, j), e) in pattern.field().indexed_iter() {
        w.write_record([
            angles.theta()[i].to_degrees().to_string(),
            angles.phi()[j].to_degrees().to_string(),
            e.re.to_string(),
            e.im.to_string(),
            db[[i, j]].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics_json<W: Write>(writer: W, metrics: &PatternMetrics) -> Result<()> {
    serde_json::to_writer_pretty(writer, metrics)?;
    Ok(())
}

pub const REPORT_COLUMNS: [&str; 7] = [
    "schema_version",
    "method",
    "K",
    "offset_m",
    "ue_index",
    "snr_db",
    "throughput_bps",
];

/// One row per UE and a `total` row per report. The SNR column holds the
/// mmWave link SNR; throughput includes the macro path where present.
pub fn write_report_csv<W: Write>(writer: W, reports: &[ThroughputReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(REPORT_COLUMNS)?;
    for r in reports {
        let prefix = [
            r.schema_version.to_string(),
            r.method.to_string(),
            r.ue_count.to_string(),
            r.offset_m.to_string(),
        ];
        for ue in &r.ues {
            w.write_record(prefix.iter().cloned().chain([
                ue.ue_index.to_string(),
                ue.ris_link.snr_db.to_string(),
                ue.throughput_bps.to_string(),
            ]))?;
        }
        w.write_record(prefix.iter().cloned().chain([
            "total".to_string(),
            String::new(),
            r.total_throughput_bps.to_string(),
        ]))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report_json<W: Write>(writer: W, reports: &[ThroughputReport]) -> Result<()> {
    serde_json::to_writer_pretty(writer, reports)?;
    Ok(())
}
