//! The correct-shift table: one row per model plus the human baselines.

use super::{ReportError, StatsRow};
use crate::interpret::HUMAN_BASELINES;

/// Placeholder for a cell with no value.
pub const MISSING: &str = "–";

pub const COLUMNS: [&str; 4] = [
    "Comma absent: chunks 1-4",
    "Comma absent: chunks 1-5",
    "Comma present: chunks 1-4",
    "Comma present: chunks 1-5",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftTableRow {
    pub label: String,
    /// Percentages in [`COLUMNS`] order.
    pub cells: [Option<f64>; 4],
}

impl ShiftTableRow {
    pub fn new(label: impl Into<String>, cells: [Option<f64>; 4]) -> Self {
        ShiftTableRow {
            label: label.into(),
            cells,
        }
    }
}

/// Human rows: only the end-of-sentence columns are filled.
pub fn human_rows() -> Vec<ShiftTableRow> {
    HUMAN_BASELINES
        .iter()
        .map(|h| ShiftTableRow::new(h.study, [None, Some(h.comma_absent), None, Some(h.comma_present)]))
        .collect()
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| MISSING.to_string(), |v| format!("{v:.2}"))
}

fn validate(rows: &[ShiftTableRow]) -> Result<(), ReportError> {
    for row in rows {
        for v in row.cells.iter().flatten() {
            if !v.is_finite() {
                return Err(ReportError::NonFinite(format!("shift table row {}", row.label)));
            }
            if !(0.0..=100.0).contains(v) {
                return Err(ReportError::OutOfRange {
                    what: format!("shift table row {}", row.label),
                    value: *v,
                });
            }
        }
    }
    Ok(())
}

fn escape_cell(s: &str) -> String {
    s.replace('|', "\\|")
}

pub fn render_markdown(rows: &[ShiftTableRow]) -> Result<String, ReportError> {
    validate(rows)?;
    let mut out = format!("| Model | {} |\n", COLUMNS.join(" | "));
    out.push_str("|---|---:|---:|---:|---:|\n");
    for row in rows {
        let cells: Vec<String> = row.cells.iter().map(|&v| cell(v)).collect();
        out.push_str(&format!("| {} | {} |\n", escape_cell(&row.label), cells.join(" | ")));
    }
    Ok(out)
}

pub fn render_csv(rows: &[ShiftTableRow]) -> Result<String, ReportError> {
    validate(rows)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = std::iter::once("model").chain(COLUMNS);
    let csv_err = |e: csv::Error| ReportError::Csv {
        path: "shift_table.csv".into(),
        message: e.to_string(),
    };
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        let record = std::iter::once(row.label.clone()).chain(row.cells.iter().map(|&v| cell(v)));
        w.write_record(record).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Csv {
        path: "shift_table.csv".into(),
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn opt(v: Option<f64>, decimals: usize) -> String {
    v.filter(|v| v.is_finite())
        .map_or_else(|| MISSING.to_string(), |v| format!("{v:.decimals$}"))
}

/// Test results, t and df to 2 decimals, p to 4.
pub fn render_stats(rows: &[StatsRow]) -> String {
    let mut out = String::from("| Contrast | Test | t | df | p | n | Note |\n|---|---|---:|---:|---:|---:|---|\n");
    for r in rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} |\n",
            escape_cell(&r.contrast),
            escape_cell(&r.test),
            opt(r.t, 2),
            opt(r.df, 2),
            opt(r.p, 4),
            r.n,
            escape_cell(&r.note)
        ));
    }
    out
}
