//! Deterministic file output: trajectory CSVs with 17-significant-digit
//! floats and the per-run summary JSON.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use pretime::Trajectory;

use crate::error::CliError;

/// 17 significant digits, scientific, byte-stable across platforms.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes one trajectory as CSV with header `t,x1[,x2][,sigma],u,delta`.
pub fn write_trajectory_csv(path: &Path, tr: &Trajectory) -> Result<(), CliError> {
    let dim = tr.states.first().map_or(1, Vec::len);
    let mut buf = String::new();
    buf.push('t');
    for i in 0..dim {
        buf.push_str(&format!(",x{}", i + 1));
    }
    if tr.sliding.is_some() {
        buf.push_str(",sigma");
    }
    buf.push_str(",u,delta\n");
    for i in 0..tr.times.len() {
        buf.push_str(&fmt_f64(tr.times[i]));
        for v in &tr.states[i] {
            buf.push(',');
            buf.push_str(&fmt_f64(*v));
        }
        if let Some(s) = &tr.sliding {
            buf.push(',');
            buf.push_str(&fmt_f64(s[i]));
        }
        buf.push(',');
        buf.push_str(&fmt_f64(tr.controls[i]));
        buf.push(',');
        buf.push_str(&fmt_f64(tr.disturbances[i]));
        buf.push('\n');
    }
    let mut file = fs::File::create(path)?;
    file.write_all(buf.as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
pub struct BoundReportJson {
    pub gamma: f64,
    pub t_max_classical: f64,
    pub conservatism_ratio: f64,
    pub overflowed: bool,
}

impl From<pretime::BoundReport> for BoundReportJson {
    fn from(r: pretime::BoundReport) -> Self {
        Self {
            gamma: r.gamma,
            t_max_classical: r.t_max_classical,
            conservatism_ratio: r.conservatism_ratio,
            overflowed: r.overflowed,
        }
    }
}

#[derive(Serialize)]
pub struct RunEntry {
    pub initial_condition: Vec<f64>,
    pub settled_at: Option<f64>,
    pub sigma_crossed_at: Option<f64>,
    pub steps_taken: u64,
    pub file: String,
}

/// Per-run summary; `wall_clock_seconds` is the only nondeterministic field
/// and lives outside the reproducibility contract.
#[derive(Serialize)]
pub struct RunSummary {
    pub name: String,
    pub system: String,
    pub params: std::collections::BTreeMap<String, f64>,
    pub gamma: Option<f64>,
    pub t_c: Option<f64>,
    pub settle_band: f64,
    pub runs: Vec<RunEntry>,
    pub bound_report: Option<BoundReportJson>,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
}

pub fn write_summary(path: &Path, summary: &RunSummary) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(summary)
        .map_err(|e| CliError::Io(format!("summary serialization: {e}")))?;
    fs::write(path, json + "\n")?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

