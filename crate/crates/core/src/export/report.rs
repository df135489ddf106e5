//! The JSON geometry report. Field order is fixed by the struct layout.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::export::config::{PotentialInfo, RunConfig};
use crate::potential::Regime;

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualRow {
    pub name: String,
    pub max: f64,
    pub mean: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Number of nodes the statistic was taken over.
    pub count: usize,
}

impl ResidualRow {
    /// Statistics of the finite values; an empty set passes with zeros.
    pub fn from_values(name: &str, values: impl IntoIterator<Item = f64>, tolerance: f64) -> ResidualRow {
        let (mut max, mut sum, mut count) = (0.0f64, 0.0, 0usize);
        let mut bad = false;
        for v in values {
            if v.is_nan() {
                continue;
            }
            if !v.is_finite() {
                bad = true;
                continue;
            }
            max = max.max(v);
            sum += v;
            count += 1;
        }
        let mean = if count > 0 { sum / count as f64 } else { 0.0 };
        ResidualRow { name: name.to_string(), max, mean, tolerance, pass: !bad && max <= tolerance, count }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SingularSummary {
    pub nodes: usize,
    pub cell_id: usize,
    pub cell_omega0: usize,
    pub singular: usize,
    /// Nodes with a frame whose Sym output failed the membership check.
    pub rejected: usize,
    /// Nodes inside the exclusion zone around S₀ and SINGULAR nodes.
    pub excluded: usize,
    /// Exported vertices on the backward sheet (tr f < 0).
    pub backward_sheet_vertices: usize,
    pub curves: usize,
    pub curve_points: usize,
    /// Error code → number of SINGULAR nodes it caused.
    pub reasons: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TruncationSummary {
    pub truncation: usize,
    pub max_ledger: f64,
    pub mean_ledger: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Timings {
    pub integrate_s: f64,
    pub factorize_s: f64,
    pub geometry_s: f64,
    pub total_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeometryReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub potential: PotentialInfo,
    pub regime: Regime,
    pub h_target: f64,
    pub residuals: Vec<ResidualRow>,
    pub singular_set: SingularSummary,
    pub truncation: TruncationSummary,
    pub timings: Option<Timings>,
    pub passed: bool,
}

impl GeometryReport {
    pub fn row(&self, name: &str) -> Option<&ResidualRow> {
        self.residuals.iter().find(|r| r.name == name)
    }
    pub fn failed(&self) -> Vec<&str> {
        self.residuals.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect()
    }
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(v: &T, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(v)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_report(report: &GeometryReport, path: &Path) -> Result<()> {
    write_json(report, path)
}
