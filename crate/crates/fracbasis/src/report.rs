//! CSV / JSON report emission.
//!
//! Floats are printed as `{:.16e}` (17 significant digits) so the CSV parses
//! back to the exact same values and reruns are byte-identical.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rcgbm::ErrorTable;

pub const CSV_HEADER: &str = "i,t,c,err_abs,err_rel";

/// Per-shift error table as CSV text. `i` is 1-based; with no table the
/// header alone is returned.
pub fn csv_string(table: Option<&ErrorTable>) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    if let Some(table) = table {
        for row in &table.rows {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                row.index + 1,
                row.shift,
                row.residue,
                row.abs,
                row.rel
            ));
        }
    }
    out
}

pub fn write_error_csv(path: &Path, table: Option<&ErrorTable>) -> Result<()> {
    fs::write(path, csv_string(table)).map_err(Error::from)
}

/// Wall-clock seconds per phase of a run.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct TimingSummary {
    pub fit_seconds: f64,
    pub assemble_seconds: f64,
    pub basis_seconds: f64,
    pub solve_seconds: f64,
    pub reference_seconds: f64,
    pub total_seconds: f64,
}

/// Everything a run reports besides the per-shift table. Each number is
/// recomputable from the emitted artifacts; timings are informational and the
/// only part that varies between identical reruns.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub version: String,
    pub family: String,
    pub n: usize,
    pub s: f64,
    pub epsilon: f64,
    pub n_terms: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rational_max_error: Option<f64>,
    pub lambda: f64,
    pub m: usize,
    pub d: f64,
    pub shift_s: f64,
    pub precond: String,
    pub two_preconditioners: bool,
    pub truncated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avg_degree: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_abs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_rel: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub err_vs_exact: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub err_vs_discrete: Option<f64>,
    pub timings: TimingSummary,
}

impl RunSummary {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Parse(format!("summary serialization: {e}")))
    }
}

pub fn write_summary(path: &Path, summary: &RunSummary) -> Result<()> {
    let mut text = summary.to_json()?;
    text.push('\n');
    fs::write(path, text).map_err(Error::from)
}
