//! Tabular output rendering (CSV and JSON) and atomic file writes.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::process;

use serde_json::{json, Value};

use crate::analysis::SnrValue;
use crate::error::DataError;
use crate::pairing::ResampleSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format {other:?}, expected csv or json")),
        }
    }
}

/// One table cell. Floats render through Rust's shortest round-trip
/// formatting so re-reading an emitted file reproduces the exact bits.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Str(String),
    U64(u64),
    Usize(usize),
    F64(f64),
    Bool(bool),
    Snr(SnrValue),
    /// Empty CSV field, JSON null.
    Missing,
}

impl Cell {
    pub fn opt_f64(v: Option<f64>) -> Cell {
        match v {
            Some(v) => Cell::F64(v),
            None => Cell::Missing,
        }
    }

    fn csv_text(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::U64(v) => v.to_string(),
            Cell::Usize(v) => v.to_string(),
            Cell::F64(v) => format!("{v}"),
            Cell::Bool(v) => v.to_string(),
            Cell::Snr(v) => format!("{v}"),
            Cell::Missing => String::new(),
        }
    }

    fn json_value(&self) -> Value {
        match self {
            Cell::Str(s) => json!(s),
            Cell::U64(v) => json!(v),
            Cell::Usize(v) => json!(v),
            Cell::F64(v) => float_value(*v),
            Cell::Bool(v) => json!(v),
            Cell::Snr(v) => match v {
                SnrValue::Finite(x) => float_value(*x),
                other => json!(format!("{other}")),
            },
            Cell::Missing => Value::Null,
        }
    }
}

/// JSON numbers cannot hold NaN or infinities; those fall back to strings.
fn float_value(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(format!("{v}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.render_csv(),
            OutputFormat::Json => self.render_json(),
        }
    }

    fn render_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv_text).collect();
            w.write_record(&cells).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flushed")).expect("csv is utf8")
    }

    fn render_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = serde_json::Map::new();
                for (name, cell) in self.columns.iter().zip(row) {
                    obj.insert((*name).to_string(), cell.json_value());
                }
                Value::Object(obj)
            })
            .collect();
        let mut out = serde_json::to_string_pretty(&Value::Array(rows)).expect("serializable");
        out.push('\n');
        out
    }
}

/// Resampled-statistic distribution: one draw per line, then a summary
/// row holding the mean and sample std.
pub fn render_resample(summary: &ResampleSummary, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let mut out = String::new();
            for d in &summary.draws {
                out.push_str(&format!("{d}\n"));
            }
            out.push_str(&format!("{},{}\n", summary.mean, summary.std));
            out
        }
        OutputFormat::Json => {
            let value = json!({
                "draws": summary.draws,
                "mean": float_value(summary.mean),
                "std": float_value(summary.std),
            });
            let mut out = serde_json::to_string_pretty(&value).expect("serializable");
            out.push('\n');
            out
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    /// (benchmark label, x, y), one point per benchmark.
    pub points: Vec<(String, f64, f64)>,
    pub r: f64,
    pub r_squared: f64,
    /// x values are log10-transformed before correlating.
    pub log_x: bool,
}

/// Plot-data rows plus a trailing summary row carrying r and r squared.
pub fn render_correlation(report: &CorrelationReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let mut table = Table::new(vec!["x", "y", "label"]);
            for (label, x, y) in &report.points {
                table.push(vec![Cell::F64(*x), Cell::F64(*y), Cell::Str(label.clone())]);
            }
            table.push(vec![
                Cell::F64(report.r),
                Cell::F64(report.r_squared),
                Cell::Str("summary".into()),
            ]);
            table.render(OutputFormat::Csv)
        }
        OutputFormat::Json => {
            let points: Vec<Value> = report
                .points
                .iter()
                .map(|(label, x, y)| {
                    json!({"label": label, "x": float_value(*x), "y": float_value(*y)})
                })
                .collect();
            let value = json!({
                "points": points,
                "r": float_value(report.r),
                "r_squared": float_value(report.r_squared),
                "log_x": report.log_x,
            });
            let mut out = serde_json::to_string_pretty(&value).expect("serializable");
            out.push('\n');
            out
        }
    }
}

/// Writes via a same-directory temp file and rename, so readers never see
/// a half-written report.
pub fn atomic_write(path: &Path, content: &str) -> Result<(), DataError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| DataError::io(&dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| DataError::Invalid(format!("not a writable path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp).map_err(|e| DataError::io(&tmp, e))?;
        f.write_all(content.as_bytes()).map_err(|e| DataError::io(&tmp, e))?;
        f.sync_all().map_err(|e| DataError::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| DataError::io(path, e))
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Sends the rendered report to the given file atomically, or to stdout.
pub fn emit(out: Option<&Path>, content: &str) -> Result<(), DataError> {
    match out {
        Some(path) => atomic_write(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_table() -> Table {
        let mut t = Table::new(vec!["benchmark", "snr", "window_n", "note"]);
        t.push(vec![
            Cell::Str("b1".into()),
            Cell::Snr(SnrValue::Finite(2.5)),
            Cell::U64(5),
            Cell::Missing,
        ]);
        t.push(vec![
            Cell::Str("b2".into()),
            Cell::Snr(SnrValue::Infinite),
            Cell::U64(5),
            Cell::Str("has,comma".into()),
        ]);
        t
    }

    #[test]
    fn csv_quotes_commas_and_prints_special_snrs() {
        let out = sample_table().render(OutputFormat::Csv);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "benchmark,snr,window_n,note");
        assert_eq!(lines[1], "b1,2.5,5,");
        assert_eq!(lines[2], "b2,inf,5,\"has,comma\"");
    }

    #[test]
    fn json_uses_null_for_missing_and_strings_for_nonfinite() {
        let out = sample_table().render(OutputFormat::Json);
        let parsed: Value = serde_json::from_str(&out).unwrap();
        let rows = parsed.as_array().unwrap();
        assert_eq!(rows[0]["snr"], json!(2.5));
        assert_eq!(rows[0]["note"], Value::Null);
        assert_eq!(rows[1]["snr"], json!("inf"));
    }

    #[test]
    fn float_cells_round_trip_through_text() {
        let v = 0.1 + 0.2;
        let mut t = Table::new(vec!["x"]);
        t.push(vec![Cell::F64(v)]);
        let csv = t.render(OutputFormat::Csv);
        let text = csv.lines().nth(1).unwrap();
        assert_eq!(text.parse::<f64>().unwrap().to_bits(), v.to_bits());
    }

    #[test]
    fn resample_rendering_lists_draws_then_summary() {
        let summary = ResampleSummary { draws: vec![0.5, 0.75, 1.0], mean: 0.75, std: 0.25 };
        let csv = render_resample(&summary, OutputFormat::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines, vec!["0.5", "0.75", "1", "0.75,0.25"]);
        let parsed: Value =
            serde_json::from_str(&render_resample(&summary, OutputFormat::Json)).unwrap();
        assert_eq!(parsed["mean"], json!(0.75));
        assert_eq!(parsed["draws"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn correlation_rendering_appends_summary_row() {
        let report = CorrelationReport {
            points: vec![("a".into(), 1.0, 2.0), ("b".into(), 3.0, 4.0)],
            r: 0.9,
            r_squared: 0.81,
            log_x: true,
        };
        let csv = render_correlation(&report, OutputFormat::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x,y,label");
        assert_eq!(lines[1], "1,2,a");
        assert_eq!(lines.last().unwrap(), &"0.9,0.81,summary");
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        atomic_write(&path, "first\n").unwrap();
        atomic_write(&path, "second\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "second\n");
        let leftovers: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .filter(|n| n != "out.csv")
            .collect();
        assert!(leftovers.is_empty(), "{leftovers:?}");
    }
}
