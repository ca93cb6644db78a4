use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::commands::{BenchReport, CalibrateReport};
use crate::error::CliError;
use crate::report::Envelope;

fn to_csv<R: Serialize>(header: &[&str], rows: impl IntoIterator<Item = R>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.serialize(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

/// `budget,roc_auc,wall_clock_s,scorer_calls`
pub fn bench_csv(report: &BenchReport) -> String {
    to_csv(
        &["budget", "roc_auc", "wall_clock_s", "scorer_calls"],
        report
            .rows
            .iter()
            .map(|r| (r.budget, r.roc_auc, r.wall_clock_s, r.scorer_calls)),
    )
}

/// `budget,ece`
pub fn calibration_csv(report: &CalibrateReport) -> String {
    to_csv(&["budget", "ece"], report.rows.iter().map(|r| (r.budget, r.ece)))
}

/// `budget,x,y,bin_size`: mean predicted probability against fraction positive.
pub fn curve_csv(report: &CalibrateReport) -> String {
    to_csv(
        &["budget", "x", "y", "bin_size"],
        report.rows.iter().flat_map(|r| {
            r.curve
                .iter()
                .map(move |p| (r.budget, p.mean_predicted, p.fraction_positive, p.bin_size))
        }),
    )
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

/// Writes the full report to `out`, or to stdout.
pub fn emit<T: Serialize>(envelope: &Envelope<T>, out: Option<&Path>) -> Result<(), CliError> {
    let json = envelope.to_json();
    match out {
        Some(path) => write_file(path, &json),
        None => std::io::stdout()
            .lock()
            .write_all(json.as_bytes())
            .map_err(CliError::internal),
    }
}
