//! Deterministic CSV emission and JSON summaries.
//!
//! Floats are printed with Rust's shortest round-trip formatting, so parsing
//! the file recovers every value exactly and identical runs produce
//! byte-identical output.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use storm_core::StzLabel;

use crate::quad::QuadRecord;
use crate::sweep::{SweepOutcome, SweepRecord};

/// CSV header of a sweep file.
pub fn sweep_csv_header() -> String {
    let mut header = String::from("swept_param,value,p_s_exact,p_s_analytic");
    for label in StzLabel::CSV_ORDER {
        let _ = write!(header, ",pop_{}", label.as_str());
    }
    header.push_str(",p_s_exact_norm,p_s_analytic_norm");
    header
}

/// Render sweep records as CSV text: one header row plus one row per record,
/// in sweep order. Normalized columns divide by the window's |p_s| maximum
/// (zero profiles stay zero).
pub fn sweep_csv(axis_name: &str, records: &[SweepRecord]) -> String {
    let max_exact = records.iter().fold(0.0f64, |m, r| m.max(r.p_s_exact.abs()));
    let max_analytic = records
        .iter()
        .fold(0.0f64, |m, r| m.max(r.p_s_analytic.abs()));
    let norm = |v: f64, max: f64| if max > 0.0 { v / max } else { 0.0 };

    let mut out = sweep_csv_header();
    out.push('\n');
    for record in records {
        let _ = write!(
            out,
            "{axis_name},{},{},{}",
            record.value, record.p_s_exact, record.p_s_analytic
        );
        for label in StzLabel::CSV_ORDER {
            let _ = write!(out, ",{}", record.populations.get(label));
        }
        let _ = writeln!(
            out,
            ",{},{}",
            norm(record.p_s_exact, max_exact),
            norm(record.p_s_analytic, max_analytic)
        );
    }
    out
}

pub fn write_sweep_csv(outcome: &SweepOutcome, path: &Path) -> io::Result<()> {
    std::fs::write(
        path,
        sweep_csv(outcome.axis.column_name(), &outcome.records),
    )
}

/// Render the quadrupolar efficiency map as CSV.
pub fn quad_csv(records: &[QuadRecord]) -> String {
    let mut out = String::from("j_quad_hz,nu_rot_hz,p_s_quad,p_s_baseline,efficiency\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.j_quad_hz, r.nu_rot_hz, r.p_s_quad, r.p_s_baseline, r.efficiency
        );
    }
    out
}

pub fn write_quad_csv(records: &[QuadRecord], path: &Path) -> io::Result<()> {
    std::fs::write(path, quad_csv(records))
}

/// Summary path for a CSV output: `foo.csv` -> `foo.summary.json`.
pub fn summary_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("output");
    csv_path.with_file_name(format!("{stem}.summary.json"))
}

pub fn write_summary_json<T: Serialize>(summary: &T, path: &Path) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    std::fs::write(path, text)
}
