//! On-disk formats. Every file starts with a schema tag and is written in one
//! go, never appended to.
//!
//! * traces: one JSON object per line (header, one line per iteration, status)
//! * aggregate curves: CSV with a `#` schema line
//! * runtime reports: CSV with a `#` schema line

use std::fs;
use std::path::Path;

use fitbo::bo::{BoTrace, IterationRecord};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const TRACE_SCHEMA: &str = "fitbo-trace/1";
pub const AGGREGATE_SCHEMA: &str = "fitbo-aggregate/1";
pub const RUNTIME_SCHEMA: &str = "fitbo-runtime/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Complete,
    Failed { error: String },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "line", rename_all = "kebab-case")]
enum TraceLine {
    Header {
        schema: String,
        problem: String,
        acquisition: String,
        seed: u64,
        initial_x: Vec<Vec<f64>>,
        initial_y: Vec<f64>,
    },
    Record(IterationRecord),
    Status {
        status: RunStatus,
    },
}

fn json_line(line: &TraceLine) -> Result<String> {
    serde_json::to_string(line).map_err(|e| CliError::parse("trace line", e))
}

pub fn format_trace(trace: &BoTrace, status: &RunStatus) -> Result<String> {
    let mut out = json_line(&TraceLine::Header {
        schema: TRACE_SCHEMA.to_string(),
        problem: trace.problem.clone(),
        acquisition: trace.acquisition.clone(),
        seed: trace.seed,
        initial_x: trace.initial_x.clone(),
        initial_y: trace.initial_y.clone(),
    })?;
    out.push('\n');
    for r in &trace.records {
        out.push_str(&json_line(&TraceLine::Record(r.clone()))?);
        out.push('\n');
    }
    out.push_str(&json_line(&TraceLine::Status {
        status: status.clone(),
    })?);
    out.push('\n');
    Ok(out)
}

pub fn parse_trace(text: &str) -> Result<(BoTrace, RunStatus)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let first = lines
        .next()
        .ok_or_else(|| CliError::parse("trace", "empty file"))?;
    let mut trace = match serde_json::from_str(first).map_err(|e| CliError::parse("trace", e))? {
        TraceLine::Header {
            schema,
            problem,
            acquisition,
            seed,
            initial_x,
            initial_y,
        } => {
            if schema != TRACE_SCHEMA {
                return Err(CliError::parse("trace", format!("unknown schema {schema}")));
            }
            BoTrace {
                problem,
                acquisition,
                seed,
                initial_x,
                initial_y,
                records: Vec::new(),
            }
        }
        _ => return Err(CliError::parse("trace", "first line is not a header")),
    };
    let mut status = None;
    for line in lines {
        if status.is_some() {
            return Err(CliError::parse("trace", "content after the status line"));
        }
        match serde_json::from_str(line).map_err(|e| CliError::parse("trace", e))? {
            TraceLine::Record(r) => trace.records.push(r),
            TraceLine::Status { status: s } => status = Some(s),
            TraceLine::Header { .. } => {
                return Err(CliError::parse("trace", "second header"));
            }
        }
    }
    let status = status.ok_or_else(|| CliError::parse("trace", "missing status line"))?;
    Ok((trace, status))
}

/// One row of an aggregate curve. Metric columns are empty when no run has a
/// value at that iteration (for example without a known optimum).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub iteration: usize,
    #[serde(rename = "median_IR")]
    pub median_ir: Option<f64>,
    #[serde(rename = "iqr_IR")]
    pub iqr_ir: Option<f64>,
    #[serde(rename = "median_L2")]
    pub median_l2: Option<f64>,
    #[serde(rename = "iqr_L2")]
    pub iqr_l2: Option<f64>,
}

/// Runtime of one acquisition kind at one (M, d), over `reps` repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeRow {
    pub kind: String,
    #[serde(rename = "M")]
    pub m: usize,
    pub d: usize,
    pub reps: usize,
    pub mean_s: f64,
    pub std_s: f64,
}

fn format_csv<T: Serialize>(schema: &str, rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| CliError::parse("csv row", e))?;
    }
    let body = w.into_inner().map_err(|e| CliError::parse("csv", e))?;
    let body = String::from_utf8(body).map_err(|e| CliError::parse("csv", e))?;
    Ok(format!("# {schema}\n{body}"))
}

fn parse_csv<T: for<'de> Deserialize<'de>>(
    what: &'static str,
    schema: &str,
    text: &str,
) -> Result<Vec<T>> {
    let first = text.lines().next().unwrap_or_default();
    if first.trim_start_matches('#').trim() != schema {
        return Err(CliError::parse(
            what,
            format!("expected schema line '# {schema}'"),
        ));
    }
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(|e| CliError::parse(what, e)))
        .collect()
}

/// Header row: `iteration,median_IR,iqr_IR,median_L2,iqr_L2`.
pub fn format_aggregate(rows: &[AggregateRow]) -> Result<String> {
    format_csv(AGGREGATE_SCHEMA, rows)
}

pub fn parse_aggregate(text: &str) -> Result<Vec<AggregateRow>> {
    parse_csv("aggregate file", AGGREGATE_SCHEMA, text)
}

pub fn format_runtime(rows: &[RuntimeRow]) -> Result<String> {
    format_csv(RUNTIME_SCHEMA, rows)
}

pub fn parse_runtime(text: &str) -> Result<Vec<RuntimeRow>> {
    parse_csv("runtime report", RUNTIME_SCHEMA, text)
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_header_and_empty_cells() {
        let rows = vec![AggregateRow {
            iteration: 1,
            median_ir: Some(0.5),
            iqr_ir: Some(0.25),
            median_l2: None,
            iqr_l2: None,
        }];
        let text = format_aggregate(&rows).unwrap();
        assert_eq!(
            text,
            "# fitbo-aggregate/1\niteration,median_IR,iqr_IR,median_L2,iqr_L2\n1,0.5,0.25,,\n"
        );
        assert_eq!(parse_aggregate(&text).unwrap(), rows);
    }

    #[test]
    fn schema_line_is_required() {
        assert!(parse_runtime("kind,M,d,reps,mean_s,std_s\n").is_err());
        assert!(parse_aggregate("# fitbo-runtime/1\niteration\n").is_err());
    }

    #[test]
    fn trace_needs_status() {
        let header = r#"{"line":"header","schema":"fitbo-trace/1","problem":"p","acquisition":"a","seed":1,"initial_x":[[0.5]],"initial_y":[1.0]}"#;
        assert!(parse_trace(header).is_err());
        let text = format!("{header}\n{{\"line\":\"status\",\"status\":\"complete\"}}\n");
        let (trace, status) = parse_trace(&text).unwrap();
        assert_eq!(status, RunStatus::Complete);
        assert_eq!(trace.initial_y, vec![1.0]);
        assert_eq!(format_trace(&trace, &status).unwrap(), text);
    }
}
