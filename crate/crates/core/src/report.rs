//! Structured verdicts and their serialized forms.
//!
//! Reports serialize to JSON with a fixed key order (struct declaration
//! order) and to CSV for curvature point tables. Serialization is fully
//! deterministic: identical scenarios produce byte-identical files
//! regardless of how many threads swept the grid.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "SOLUTION")]
    Solution,
    #[serde(rename = "NONEXISTENT")]
    NonExistent,
    #[serde(rename = "MISMATCH")]
    Mismatch,
    #[serde(rename = "INDETERMINATE")]
    Indeterminate,
    #[serde(rename = "OK")]
    Ok,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Solution => "SOLUTION",
            Verdict::NonExistent => "NONEXISTENT",
            Verdict::Mismatch => "MISMATCH",
            Verdict::Indeterminate => "INDETERMINATE",
            Verdict::Ok => "OK",
        }
    }

    /// CLI exit code: 0 success, 2 rejection, 3 indeterminate.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Ok | Verdict::Solution => 0,
            Verdict::NonExistent | Verdict::Mismatch => 2,
            Verdict::Indeterminate => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualEntry {
    pub name: String,
    pub max: f64,
    pub mean: f64,
    pub argmax: Vec<f64>,
    pub count: usize,
}

impl From<crate::prescribed::FamilyStat> for ResidualEntry {
    fn from(s: crate::prescribed::FamilyStat) -> Self {
        ResidualEntry {
            name: s.name,
            max: s.max,
            mean: s.mean,
            argmax: s.argmax,
            count: s.count,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessEntry {
    pub witness: String,
    pub location: Vec<f64>,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveredFamily {
    pub a: f64,
    pub b: Vec<f64>,
    pub c: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SingularSetEntry {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normal: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
}

/// Point table (curvature sweeps, sampled factors).
#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub task: String,
    pub verdict: Verdict,
    pub n: usize,
    #[serde(rename = "recovered_C")]
    pub recovered_c: Option<f64>,
    pub recovered_family: Option<RecoveredFamily>,
    pub singular_set: Option<SingularSetEntry>,
    pub completeness: Option<String>,
    pub witness: Option<WitnessEntry>,
    pub residuals: Vec<ResidualEntry>,
    pub notes: Vec<String>,
    pub errors: Vec<String>,
    pub table: Option<Table>,
}

impl Report {
    pub fn new(task: &str, n: usize) -> Self {
        Report {
            schema_version: 1,
            task: task.to_string(),
            verdict: Verdict::Indeterminate,
            n,
            recovered_c: None,
            recovered_family: None,
            singular_set: None,
            completeness: None,
            witness: None,
            residuals: Vec::new(),
            notes: Vec::new(),
            errors: Vec::new(),
            table: None,
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |acc, r| acc.max(r.max))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// CSV rendering of the point table, 17 significant digits.
    pub fn to_csv(&self) -> Result<String> {
        let table = self.table.as_ref().ok_or_else(|| Error::Schema {
            path: "table".to_string(),
            message: "report has no point table; CSV output applies to curvature tables"
                .to_string(),
        })?;
        let mut out = String::new();
        out.push_str(&table.columns.join(","));
        out.push('\n');
        for row in &table.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        Ok(out)
    }
}

/// Write a report to a file in the requested format.
pub fn emit(report: &Report, format: Format, path: &std::path::Path) -> Result<()> {
    let payload = match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv()?,
    };
    std::fs::write(path, payload).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Format> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Schema {
                path: "format".to_string(),
                message: format!("unknown format `{other}` (expected json or csv)"),
            }),
        }
    }
}
