//! Parameter sweeps: one run per value of a single config key.

use super::config::ExperimentConfig;
use super::run::{run_experiment, Verdict};
use super::ExperimentError;
use rayon::prelude::*;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub dir: PathBuf,
    pub verdict: Option<Verdict>,
    pub max_u_final: Option<f64>,
    pub delta: Option<f64>,
    /// Why the run could not be performed (bad value, I/O failure).
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub axis: String,
    pub rows: Vec<SweepRow>,
    pub summary_path: PathBuf,
}

/// Worker count used when none is given: all logical cores but one.
pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get().saturating_sub(1).max(1))
}

/// Runs `config` once per value of `axis` (`section.key`) under `out_root`,
/// each in its own `axis=value` directory, and writes `summary.csv`.
///
/// A run that fails is recorded in its row; the sweep carries on.
pub fn sweep(
    config: &ExperimentConfig,
    axis: &str,
    values: &[String],
    jobs: Option<usize>,
    out_root: &Path,
) -> Result<SweepSummary, ExperimentError> {
    if values.is_empty() {
        return Err(ExperimentError::EmptySweep);
    }
    check_axis(config, axis)?;
    std::fs::create_dir_all(out_root).map_err(|e| ExperimentError::io(out_root, e))?;
    let jobs = jobs.unwrap_or_else(default_jobs).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| ExperimentError::Malformed(format!("cannot start worker pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| values.par_iter().map(|v| sweep_one(config, axis, v, out_root)).collect());

    let summary_path = out_root.join("summary.csv");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["value", "verdict", "max_u_final", "delta", "error"])?;
    for r in &rows {
        w.write_record([
            r.value.clone(),
            r.verdict.map(|v| v.to_string()).unwrap_or_default(),
            r.max_u_final.map(|x| x.to_string()).unwrap_or_default(),
            r.delta.map(|x| x.to_string()).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| ExperimentError::io(&summary_path, e.into_error()))?;
    std::fs::write(&summary_path, bytes).map_err(|e| ExperimentError::io(&summary_path, e))?;
    Ok(SweepSummary { axis: axis.to_string(), rows, summary_path })
}

fn check_axis(config: &ExperimentConfig, axis: &str) -> Result<(), ExperimentError> {
    let bad = |why: &str| ExperimentError::BadAxis(format!("{axis}: {why}"));
    let (section, key) = axis.split_once('.').ok_or_else(|| bad("expected `section.key`"))?;
    let text = config.serialize();
    let raw = super::config::RawConfig::parse(&text).expect("canonical text parses");
    match raw.get(section, key) {
        None => Err(bad("no such key in this configuration")),
        Some(v) if v.parse::<f64>().is_err() => Err(bad("not a numeric field")),
        Some(_) => Ok(()),
    }
}

fn sweep_one(config: &ExperimentConfig, axis: &str, value: &str, out_root: &Path) -> SweepRow {
    let name: String = format!("{axis}={value}")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._=-+".contains(c) { c } else { '_' })
        .collect();
    let dir = out_root.join(name);
    let mut row = SweepRow { value: value.to_string(), dir: dir.clone(), verdict: None, max_u_final: None, delta: None, error: None };
    let mut cfg = match config.with_override(axis, value) {
        Ok(c) => c,
        Err(e) => {
            row.error = Some(e.to_string().replace('\n', "; "));
            return row;
        }
    };
    cfg.output.dir = dir;
    match run_experiment(&cfg) {
        Ok(a) => {
            row.verdict = Some(a.verdict.verdict);
            row.max_u_final = a.records.last().map(|r| r.max_u);
            row.delta = a.verdict.fit.map(|f| f.delta);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}
