//! Deterministic report artifacts rendered from analysis CSVs.
//!
//! Analysis stages write one directory of CSVs per model; [`render_reports`]
//! turns those into `reports/<model>/<artifact>.{svg,csv,md}` plus a
//! cross-model `all_models/` directory. No number shown in a report is
//! recomputed here: the report layer only reads, formats and draws.

pub mod svg;
pub mod table;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::attention::HeadMatrix;
use crate::corpus::Variant;
use crate::interpret::{AccuracySummary, MeanPoint, Question, TrajectoryPoint, HUMAN_BASELINES};
use crate::probe::{ParseTreeSnapshot, Verdict};
use crate::surprisal::SurprisalProfile;
use crate::N_CHUNKS;
pub use svg::{BarChart, BarGroup, LineChart, LineSeries, COMMA_COLORS, HEATMAP_CHROME};
pub use table::{human_rows, ShiftTableRow};

/// Probe (1) trajectories.
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
/// Probe (2) trajectories, same columns.
pub const TRAJECTORY_CORRECT_CSV: &str = "trajectory_correct.csv";
pub const TRAJECTORY_MEAN_CSV: &str = "trajectory_mean.csv";
pub const ACCURACY_CSV: &str = "accuracy.csv";
pub const SHIFT_CSV: &str = "shift.csv";
pub const VERDICTS_CSV: &str = "verdicts.csv";
pub const TREES_JSONL: &str = "trees.jsonl";
pub const SURPRISAL_CSV: &str = "surprisal.csv";
pub const SURPRISAL_MEAN_CSV: &str = "surprisal_mean.csv";
pub const STATS_CSV: &str = "stats.csv";
/// Directory (under the report root) for artifacts that compare models.
pub const COMBINED_DIR: &str = "all_models";

pub fn attention_csv(which: &str) -> String {
    format!("attention_{which}.csv")
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("{what}: value {value} out of range")]
    OutOfRange { what: String, value: f64 },
    #[error("empty series: {0}")]
    EmptySeries(String),
    #[error("{0}")]
    Shape(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    TrajectoryPlot,
    AccuracyBar,
    ShiftTable,
    Heatmap,
    SurprisalPlot,
    StatsTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactFormat {
    Svg,
    Csv,
    Markdown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportArtifact {
    pub kind: ArtifactKind,
    pub path: PathBuf,
    pub format: ArtifactFormat,
}

/// Shortest round-trip representation cut (not rounded) to four decimals.
pub fn fmt4(v: f64) -> String {
    let s = format!("{v}");
    let s = match s.find('.') {
        Some(dot) => {
            let cut = &s[..(dot + 5).min(s.len())];
            cut.trim_end_matches('0').trim_end_matches('.').to_string()
        }
        None => s,
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// Filesystem-safe directory name for a model id.
pub fn model_dir_name(model_id: &str) -> String {
    model_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

// ---- analysis CSV schemas ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub model: String,
    pub item: String,
    pub variant: Variant,
    pub chunk: usize,
    pub p_yes: f64,
    pub p_no: f64,
    pub p_yes_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeanRow {
    pub model: String,
    pub variant: Variant,
    pub question: Question,
    pub chunk: usize,
    pub mean_p_yes: Option<f64>,
    pub mean_p_no: Option<f64>,
    pub mean_p_yes_norm: Option<f64>,
    pub n: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub model: String,
    pub variant: Variant,
    pub n_items: usize,
    pub n_rejecting: usize,
    pub accuracy_pct: f64,
    pub ot_n: usize,
    pub ot_pct: f64,
    pub rat_n: usize,
    pub rat_pct: f64,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftRow {
    pub model: String,
    pub variant: Variant,
    /// Prefix length the trees were extracted from (4 or 5).
    pub chunk: usize,
    pub percent: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRow {
    pub model: String,
    pub item: String,
    pub variant: Variant,
    pub chunk: usize,
    pub verdict: Verdict,
    pub n_words: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurprisalRow {
    pub model: String,
    pub item: String,
    pub variant: Variant,
    pub chunk: usize,
    pub mean_bits: f64,
    pub n_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurprisalMeanRow {
    pub model: String,
    pub variant: Variant,
    pub chunk: usize,
    pub mean_bits: Option<f64>,
    pub n_items: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadRow {
    pub layer: usize,
    pub head: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub model: String,
    pub contrast: String,
    pub test: String,
    pub t: Option<f64>,
    pub df: Option<f64>,
    pub p: Option<f64>,
    pub mean_difference: Option<f64>,
    pub n: usize,
    /// Empty on success, otherwise why the test could not be run.
    pub note: String,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn trajectory_rows(model: &str, points: &[TrajectoryPoint]) -> Vec<TrajectoryRow> {
    points
        .iter()
        .map(|p| TrajectoryRow {
            model: model.into(),
            item: p.item_id.clone(),
            variant: p.variant,
            chunk: p.prefix_index,
            p_yes: p.p_yes,
            p_no: p.p_no,
            p_yes_norm: p.p_yes_normalized,
        })
        .collect()
}

pub fn trajectory_mean_rows(model: &str, variant: Variant, question: Question, means: &[MeanPoint]) -> Vec<TrajectoryMeanRow> {
    means
        .iter()
        .map(|m| TrajectoryMeanRow {
            model: model.into(),
            variant,
            question,
            chunk: m.prefix_index,
            mean_p_yes: finite(m.mean_p_yes),
            mean_p_no: finite(m.mean_p_no),
            mean_p_yes_norm: m.mean_p_yes_normalized,
            n: m.n,
            excluded: m.excluded,
        })
        .collect()
}

pub fn verdict_rows(model: &str, snapshots: &[ParseTreeSnapshot]) -> Vec<VerdictRow> {
    snapshots
        .iter()
        .map(|s| VerdictRow {
            model: model.into(),
            item: s.item_id.clone(),
            variant: s.variant,
            chunk: s.prefix_index,
            verdict: s.verdict,
            n_words: s.words.len(),
        })
        .collect()
}

pub fn accuracy_row(s: &AccuracySummary) -> AccuracyRow {
    AccuracyRow {
        model: s.model_id.clone(),
        variant: s.variant,
        n_items: s.n_items,
        n_rejecting: s.n_rejecting,
        accuracy_pct: 100.0 * s.accuracy,
        ot_n: s.ot.n_items,
        ot_pct: 100.0 * s.ot.accuracy,
        rat_n: s.rat.n_items,
        rat_pct: 100.0 * s.rat.accuracy,
        excluded: s.excluded,
    }
}

pub fn surprisal_rows(model: &str, profile: &SurprisalProfile) -> Vec<SurprisalRow> {
    profile
        .chunks
        .iter()
        .map(|c| SurprisalRow {
            model: model.into(),
            item: c.item_id.clone(),
            variant: c.variant,
            chunk: c.chunk_index,
            mean_bits: c.mean_surprisal_bits,
            n_tokens: c.token_count,
        })
        .collect()
}

pub fn head_rows(m: &HeadMatrix) -> Vec<HeadRow> {
    (0..m.n_layers)
        .flat_map(|layer| (0..m.n_heads).map(move |head| (layer, head)))
        .map(|(layer, head)| HeadRow {
            layer,
            head,
            value: m.get(layer, head),
        })
        .collect()
}

/// Inverse of [`head_rows`]; every `(layer, head)` cell must appear exactly once.
pub fn matrix_from_rows(rows: &[HeadRow]) -> Result<HeadMatrix, ReportError> {
    let n_layers = rows.iter().map(|r| r.layer + 1).max().unwrap_or(0);
    let n_heads = rows.iter().map(|r| r.head + 1).max().unwrap_or(0);
    if rows.is_empty() || rows.len() != n_layers * n_heads {
        return Err(ReportError::Shape(format!(
            "{} rows do not fill a {n_layers}x{n_heads} grid",
            rows.len()
        )));
    }
    let mut values = vec![None; n_layers * n_heads];
    for r in rows {
        let slot = &mut values[r.layer * n_heads + r.head];
        if slot.replace(r.value).is_some() {
            return Err(ReportError::Shape(format!("duplicate cell ({}, {})", r.layer, r.head)));
        }
    }
    Ok(HeadMatrix {
        n_layers,
        n_heads,
        values: values.into_iter().map(|v| v.unwrap()).collect(),
    })
}

// ---- CSV and file I/O ----

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ReportError> {
    let csv_err = |e: &dyn std::fmt::Display| ReportError::Csv {
        path: path.into(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(&e))?;
    }
    let bytes = w.into_inner().map_err(|e| csv_err(&e))?;
    write_bytes(path, &bytes)
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, ReportError> {
    let text = fs::read(path).map_err(|source| ReportError::Io {
        path: path.into(),
        source,
    })?;
    csv::Reader::from_reader(text.as_slice())
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| ReportError::Csv {
            path: path.into(),
            message: e.to_string(),
        })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    let io = |source| ReportError::Io {
        path: path.into(),
        source,
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io)?;
    }
    fs::write(path, bytes).map_err(io)
}

fn artifact(kind: ArtifactKind, path: &Path, format: ArtifactFormat, body: &str) -> Result<ReportArtifact, ReportError> {
    write_bytes(path, body.as_bytes())?;
    Ok(ReportArtifact {
        kind,
        path: path.into(),
        format,
    })
}

// ---- emitters ----

pub fn emit_heatmap(title: &str, matrix: &HeadMatrix, path: &Path) -> Result<ReportArtifact, ReportError> {
    if matrix.n_layers == 0 || matrix.n_heads == 0 || matrix.values.len() != matrix.n_layers * matrix.n_heads {
        return Err(ReportError::Shape(format!(
            "heatmap needs a non-empty grid, got {}x{} with {} values",
            matrix.n_layers,
            matrix.n_heads,
            matrix.values.len()
        )));
    }
    if let Some(i) = matrix.values.iter().position(|v| !v.is_finite()) {
        return Err(ReportError::NonFinite(format!(
            "heatmap cell ({}, {})",
            i / matrix.n_heads,
            i % matrix.n_heads
        )));
    }
    artifact(ArtifactKind::Heatmap, path, ArtifactFormat::Svg, &svg::heatmap(title, matrix))
}

fn check_line_chart(chart: &LineChart) -> Result<(), ReportError> {
    if chart.series.is_empty() {
        return Err(ReportError::EmptySeries(chart.title.clone()));
    }
    for s in &chart.series {
        if s.values.len() != chart.x_labels.len() {
            return Err(ReportError::Shape(format!(
                "series {} has {} points for {} x positions",
                s.label,
                s.values.len(),
                chart.x_labels.len()
            )));
        }
        if s.values.iter().all(Option::is_none) {
            return Err(ReportError::EmptySeries(s.label.clone()));
        }
        if s.values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ReportError::NonFinite(s.label.clone()));
        }
    }
    Ok(())
}

fn chunk_labels() -> Vec<String> {
    (1..=N_CHUNKS).map(|k| format!("chunk {k}")).collect()
}

/// One trajectory line: solid for the misinterpretation probe, dashed for the
/// correct one, colored by variant.
pub fn trajectory_series(label: impl Into<String>, variant: Variant, question: Question, values: Vec<Option<f64>>) -> LineSeries {
    LineSeries {
        label: label.into(),
        values,
        dashed: question == Question::Correct,
        color: Some(variant_color(variant).into()),
    }
}

fn variant_color(v: Variant) -> &'static str {
    match v {
        Variant::CommaAbsent => COMMA_COLORS[0],
        Variant::CommaPresent => COMMA_COLORS[1],
    }
}

pub fn emit_trajectory_plot(title: &str, series: Vec<LineSeries>, path: &Path) -> Result<ReportArtifact, ReportError> {
    let chart = LineChart {
        title: title.into(),
        y_label: "P(yes), normalized".into(),
        x_labels: chunk_labels(),
        y_range: (0.0, 1.0),
        series,
    };
    check_line_chart(&chart)?;
    artifact(ArtifactKind::TrajectoryPlot, path, ArtifactFormat::Svg, &svg::line_chart(&chart))
}

pub fn emit_surprisal_plot(title: &str, series: Vec<LineSeries>, path: &Path) -> Result<ReportArtifact, ReportError> {
    let top = series
        .iter()
        .flat_map(|s| s.values.iter().flatten())
        .fold(0.0f64, |m, &v| m.max(v));
    let chart = LineChart {
        title: title.into(),
        y_label: "mean surprisal (bits)".into(),
        x_labels: chunk_labels(),
        y_range: (0.0, top.ceil().max(1.0)),
        series,
    };
    check_line_chart(&chart)?;
    artifact(ArtifactKind::SurprisalPlot, path, ArtifactFormat::Svg, &svg::line_chart(&chart))
}

/// Two-tone bars (comma absent, comma present) per group, percent on y.
pub fn emit_accuracy_bar(title: &str, groups: Vec<BarGroup>, path: &Path) -> Result<ReportArtifact, ReportError> {
    if groups.is_empty() {
        return Err(ReportError::EmptySeries(title.into()));
    }
    for g in &groups {
        for v in g.values.iter().flatten() {
            if !v.is_finite() {
                return Err(ReportError::NonFinite(g.label.clone()));
            }
            if !(0.0..=100.0).contains(v) {
                return Err(ReportError::OutOfRange {
                    what: g.label.clone(),
                    value: *v,
                });
            }
        }
    }
    let chart = BarChart {
        title: title.into(),
        y_label: "accuracy (%)".into(),
        y_range: (0.0, 100.0),
        series_labels: vec!["comma absent".into(), "comma present".into()],
        colors: COMMA_COLORS.iter().map(|c| c.to_string()).collect(),
        groups,
    };
    artifact(ArtifactKind::AccuracyBar, path, ArtifactFormat::Svg, &svg::bar_chart(&chart))
}

/// Writes `<stem>.md` and `<stem>.csv`.
pub fn emit_shift_table(rows: &[ShiftTableRow], dir: &Path, stem: &str) -> Result<Vec<ReportArtifact>, ReportError> {
    let md = table::render_markdown(rows)?;
    let csv = table::render_csv(rows)?;
    Ok(vec![
        artifact(ArtifactKind::ShiftTable, &dir.join(format!("{stem}.md")), ArtifactFormat::Markdown, &md)?,
        artifact(ArtifactKind::ShiftTable, &dir.join(format!("{stem}.csv")), ArtifactFormat::Csv, &csv)?,
    ])
}

/// Row for one model from its `shift.csv` rows.
pub fn shift_table_row(label: &str, rows: &[ShiftRow]) -> ShiftTableRow {
    let find = |variant, chunk| {
        rows.iter()
            .find(|r| r.variant == variant && r.chunk == chunk)
            .and_then(|r| r.percent)
    };
    ShiftTableRow::new(
        label,
        [
            find(Variant::CommaAbsent, 4),
            find(Variant::CommaAbsent, 5),
            find(Variant::CommaPresent, 4),
            find(Variant::CommaPresent, 5),
        ],
    )
}

fn accuracy_group(label: &str, rows: &[AccuracyRow]) -> BarGroup {
    let find = |v| rows.iter().find(|r| r.variant == v).map(|r| r.accuracy_pct);
    BarGroup {
        label: label.into(),
        values: vec![find(Variant::CommaAbsent), find(Variant::CommaPresent)],
    }
}

fn human_groups() -> Vec<BarGroup> {
    HUMAN_BASELINES
        .iter()
        .map(|h| BarGroup {
            label: h.study.into(),
            values: vec![Some(h.comma_absent), Some(h.comma_present)],
        })
        .collect()
}

fn read_if_present<T: DeserializeOwned>(path: &Path) -> Result<Option<Vec<T>>, ReportError> {
    if path.is_file() {
        read_csv(path).map(Some)
    } else {
        Ok(None)
    }
}

struct ModelData {
    label: String,
    shift: Option<Vec<ShiftRow>>,
    accuracy: Option<Vec<AccuracyRow>>,
}

fn render_model(analysis: &Path, out: &Path, dir_name: &str) -> Result<(Vec<ReportArtifact>, ModelData), ReportError> {
    let mut artifacts = Vec::new();
    let mut label = dir_name.to_string();

    if let Some(rows) = read_if_present::<TrajectoryMeanRow>(&analysis.join(TRAJECTORY_MEAN_CSV))? {
        if let Some(r) = rows.first() {
            label = r.model.clone();
        }
        let mut grouped: BTreeMap<(Variant, Question), Vec<Option<f64>>> = BTreeMap::new();
        for r in &rows {
            if (1..=N_CHUNKS).contains(&r.chunk) {
                grouped.entry((r.variant, r.question)).or_insert_with(|| vec![None; N_CHUNKS])[r.chunk - 1] =
                    r.mean_p_yes_norm;
            }
        }
        let series = grouped
            .into_iter()
            .filter(|(_, v)| v.iter().any(Option::is_some))
            .map(|((variant, question), values)| {
                trajectory_series(format!("{variant}, {} probe", question.as_str()), variant, question, values)
            })
            .collect();
        artifacts.push(emit_trajectory_plot(
            &format!("Interpretation tracking: {label}"),
            series,
            &out.join("trajectory_plot.svg"),
        )?);
    }

    if let Some(rows) = read_if_present::<SurprisalMeanRow>(&analysis.join(SURPRISAL_MEAN_CSV))? {
        let mut grouped: BTreeMap<Variant, Vec<Option<f64>>> = BTreeMap::new();
        for r in &rows {
            if (1..=N_CHUNKS).contains(&r.chunk) {
                grouped.entry(r.variant).or_insert_with(|| vec![None; N_CHUNKS])[r.chunk - 1] = r.mean_bits;
            }
        }
        let series = grouped
            .into_iter()
            .map(|(variant, values)| LineSeries {
                label: variant.to_string(),
                values,
                dashed: false,
                color: Some(variant_color(variant).into()),
            })
            .collect();
        artifacts.push(emit_surprisal_plot(
            &format!("Surprisal by chunk: {label}"),
            series,
            &out.join("surprisal_plot.svg"),
        )?);
    }

    for which in ["comma_absent", "comma_present", "difference"] {
        if let Some(rows) = read_if_present::<HeadRow>(&analysis.join(attention_csv(which)))? {
            let matrix = matrix_from_rows(&rows)?;
            artifacts.push(emit_heatmap(
                &format!("Attention sensitivity ({which}): {label}"),
                &matrix,
                &out.join(format!("heatmap_{which}.svg")),
            )?);
        }
    }

    let shift = read_if_present::<ShiftRow>(&analysis.join(SHIFT_CSV))?;
    if let Some(rows) = &shift {
        let mut table = vec![shift_table_row(&label, rows)];
        table.extend(human_rows());
        artifacts.extend(emit_shift_table(&table, out, "shift_table")?);
    }

    let accuracy = read_if_present::<AccuracyRow>(&analysis.join(ACCURACY_CSV))?;
    if let Some(rows) = &accuracy {
        let mut groups = vec![accuracy_group(&label, rows)];
        groups.extend(human_groups());
        artifacts.push(emit_accuracy_bar(
            &format!("Final answer accuracy: {label}"),
            groups,
            &out.join("accuracy_bar.svg"),
        )?);
    }

    if let Some(rows) = read_if_present::<StatsRow>(&analysis.join(STATS_CSV))? {
        let md = table::render_stats(&rows);
        artifacts.push(artifact(
            ArtifactKind::StatsTable,
            &out.join("stats_table.md"),
            ArtifactFormat::Markdown,
            &md,
        )?);
    }

    Ok((artifacts, ModelData { label, shift, accuracy }))
}

/// Renders every model directory under `analysis_root` into `reports_root`.
///
/// Models are visited in directory-name order, so the output is independent
/// of filesystem iteration order.
pub fn render_reports(analysis_root: &Path, reports_root: &Path) -> Result<Vec<ReportArtifact>, ReportError> {
    let io = |source| ReportError::Io {
        path: analysis_root.into(),
        source,
    };
    let mut dirs: Vec<(String, PathBuf)> = fs::read_dir(analysis_root)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(io)?
        .into_iter()
        .filter(|p| p.is_dir())
        .filter_map(|p| Some((p.file_name()?.to_str()?.to_string(), p)))
        .collect();
    dirs.sort();

    let mut artifacts = Vec::new();
    let mut models = Vec::new();
    for (name, dir) in &dirs {
        let (a, data) = render_model(dir, &reports_root.join(name), name)?;
        artifacts.extend(a);
        models.push(data);
    }

    let combined = reports_root.join(COMBINED_DIR);
    let mut table: Vec<ShiftTableRow> = models
        .iter()
        .filter_map(|m| m.shift.as_ref().map(|rows| shift_table_row(&m.label, rows)))
        .collect();
    if !table.is_empty() {
        table.extend(human_rows());
        artifacts.extend(emit_shift_table(&table, &combined, "shift_table")?);
    }
    let mut groups: Vec<BarGroup> = models
        .iter()
        .filter_map(|m| m.accuracy.as_ref().map(|rows| accuracy_group(&m.label, rows)))
        .collect();
    if !groups.is_empty() {
        groups.extend(human_groups());
        artifacts.push(emit_accuracy_bar(
            "Final answer accuracy across models",
            groups,
            &combined.join("accuracy_bar.svg"),
        )?);
    }
    Ok(artifacts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt4_truncates() {
        assert_eq!(fmt4(0.123456), "0.1234");
        assert_eq!(fmt4(0.99999), "0.9999");
        assert_eq!(fmt4(2.0), "2");
        assert_eq!(fmt4(-0.00001), "0");
        assert_eq!(fmt4(-1.5), "-1.5");
        assert_eq!(fmt4(245.0), "245");
    }

    #[test]
    fn head_rows_round_trip() {
        let m = HeadMatrix {
            n_layers: 2,
            n_heads: 3,
            values: vec![0.1, -0.2, 0.3, 0.0, 1.0, -1.0],
        };
        assert_eq!(matrix_from_rows(&head_rows(&m)).unwrap(), m);
        let mut rows = head_rows(&m);
        rows.pop();
        assert!(matrix_from_rows(&rows).is_err());
    }

    #[test]
    fn csv_round_trip_preserves_floats_and_missing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("shift.csv");
        let rows = vec![
            ShiftRow {
                model: "m".into(),
                variant: Variant::CommaAbsent,
                chunk: 4,
                percent: Some(100.0 / 24.0),
                n: 24,
            },
            ShiftRow {
                model: "m".into(),
                variant: Variant::CommaPresent,
                chunk: 5,
                percent: None,
                n: 0,
            },
        ];
        write_csv(&path, &rows).unwrap();
        assert_eq!(read_csv::<ShiftRow>(&path).unwrap(), rows);
    }

    #[test]
    fn heatmap_rejects_nan() {
        let dir = tempfile::tempdir().unwrap();
        let m = HeadMatrix {
            n_layers: 1,
            n_heads: 2,
            values: vec![0.0, f64::NAN],
        };
        assert!(matches!(
            emit_heatmap("t", &m, &dir.path().join("h.svg")),
            Err(ReportError::NonFinite(_))
        ));
    }

    #[test]
    fn empty_series_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.svg");
        assert!(matches!(emit_trajectory_plot("t", vec![], &p), Err(ReportError::EmptySeries(_))));
        assert!(matches!(emit_accuracy_bar("t", vec![], &p), Err(ReportError::EmptySeries(_))));
    }
}
