//! Trace CSV: header `time,<labels>`, one row per sample, LF endings,
//! numbers in shortest round-trip decimal.

use thiserror::Error;

use crate::evaluation::{DynamicsReport, PerformanceResult, PerturbationResult};
use crate::expr::fmt_number;
use crate::sim::Trace;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CsvError {
    #[error("species '{0}' is not in the trace")]
    UnknownSpecies(String),
    #[error("CSV error: {0}")]
    Format(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
}

impl From<::csv::Error> for CsvError {
    fn from(e: ::csv::Error) -> Self {
        CsvError::Format(e.to_string())
    }
}

/// Parsed CSV table: sample times and one row of values per time.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

fn writer() -> ::csv::Writer<Vec<u8>> {
    ::csv::WriterBuilder::new()
        .terminator(::csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: ::csv::Writer<Vec<u8>>) -> Result<String, CsvError> {
    let bytes = w.into_inner().map_err(|e| CsvError::Format(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Writes any header plus numeric rows in the trace layout.
pub fn write_table(header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<String, CsvError> {
    write_records(header, rows.into_iter().map(|r| r.iter().map(|v| fmt_number(*v)).collect()))
}

pub fn write_records(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, CsvError> {
    let mut w = writer();
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    finish(w)
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// One row per translation and sample time: `translation,time,mean,std,success_rate`.
/// `success_rate` is empty for numeric translations.
pub fn performance_csv(result: &PerformanceResult) -> Result<String, CsvError> {
    let mut rows = Vec::new();
    for t in &result.translations {
        for (i, time) in t.times.iter().enumerate() {
            rows.push(vec![
                t.name.clone(),
                fmt_number(*time),
                fmt_number(t.mean[i]),
                fmt_number(t.std[i]),
                t.success_rate.as_ref().map_or(String::new(), |s| fmt_number(s[i])),
            ]);
        }
    }
    write_records(&header(&["translation", "time", "mean", "std", "success_rate"]), rows)
}

/// One row per perturbation sample: `sample,<target…>,summary,failures`.
pub fn perturbation_csv(targets: &[String], result: &PerturbationResult) -> Result<String, CsvError> {
    let mut head = vec!["sample".to_string()];
    head.extend(targets.iter().cloned());
    head.extend(["summary".to_string(), "failures".to_string()]);
    let rows = result.samples.iter().enumerate().map(|(i, s)| {
        let mut row = vec![i.to_string()];
        row.extend(s.rates.iter().map(|v| fmt_number(*v)));
        row.push(fmt_number(s.summary));
        row.push(s.failures.to_string());
        row
    });
    write_records(&head, rows)
}

/// Long-format dynamics report: `quantity,species,value`. Fixed-point rows
/// are included when `fixed_points` is set.
pub fn report_csv(report: &DynamicsReport, fixed_points: bool) -> Result<String, CsvError> {
    let mut rows = Vec::new();
    if let Some(l) = report.largest_lyapunov {
        rows.push(vec!["largest_lyapunov".into(), String::new(), fmt_number(l)]);
    }
    if fixed_points {
        rows.push(vec![
            "fixed_point_count".into(),
            String::new(),
            report.fixed_points.count.to_string(),
        ]);
    }
    for (i, label) in report.labels.iter().enumerate() {
        if fixed_points {
            let flag = if report.fixed_points.flags[i] { "1" } else { "0" };
            rows.push(vec!["fixed_point".into(), label.clone(), flag.into()]);
        }
        rows.push(vec![
            "final_derivative".into(),
            label.clone(),
            fmt_number(report.final_derivative[i]),
        ]);
    }
    write_records(&header(&["quantity", "species", "value"]), rows)
}

/// Exports `trace`, restricted to `filter` (in the given order) when present.
pub fn export_csv(trace: &Trace, filter: Option<&[String]>) -> Result<String, CsvError> {
    let columns: Vec<usize> = match filter {
        None => (0..trace.labels.len()).collect(),
        Some(f) => f
            .iter()
            .map(|s| {
                trace
                    .labels
                    .iter()
                    .position(|l| l == s)
                    .ok_or_else(|| CsvError::UnknownSpecies(s.clone()))
            })
            .collect::<Result<_, _>>()?,
    };
    let mut header = vec!["time".to_string()];
    header.extend(columns.iter().map(|&c| trace.labels[c].clone()));
    let rows = trace.times.iter().zip(&trace.values).map(|(t, row)| {
        let mut out = vec![*t];
        out.extend(columns.iter().map(|&c| row[c]));
        out
    });
    write_table(&header, rows)
}

pub fn parse_csv(text: &str) -> Result<Table, CsvError> {
    let mut r = ::csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("time") {
        return Err(CsvError::Parse {
            line: 1,
            message: "first column must be 'time'".into(),
        });
    }
    let mut table = Table {
        labels: header[1..].to_vec(),
        times: Vec::new(),
        values: Vec::new(),
    };
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let nums = record
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| CsvError::Parse {
                    line,
                    message: format!("'{f}' is not a number"),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        table.times.push(nums[0]);
        table.values.push(nums[1..].to_vec());
    }
    Ok(table)
}
