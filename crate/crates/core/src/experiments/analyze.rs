//! Post-hoc analysis of a run directory, from `diagnostics.csv` alone.

use super::run::{derive_verdict, RunMeta, VerdictReport, DIAGNOSTICS_VERSION};
use super::ExperimentError;
use crate::diagnostics::{lyapunov_violations, DiagnosticsRecord};
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub meta: RunMeta,
    pub records: Vec<DiagnosticsRecord>,
    /// Failure message from the status line, when the run stopped early.
    pub failure: Option<String>,
    pub verdict: VerdictReport,
    pub lyapunov_violations: usize,
    pub lyapunov_min: f64,
    pub lyapunov_initial: f64,
    pub dissipation_integral: f64,
    /// Largest `|∫(u+n) − ∫(u+n)(0)| / ∫(u+n)(0)`.
    pub mass_drift: f64,
    pub min_v: f64,
    /// Largest `max v/w` for `t ≥ 1`.
    pub ratio_upper_max: Option<f64>,
    /// Smallest `min v/S` for `t ≥ 1`.
    pub ratio_lower_min: Option<f64>,
    pub sandwich_defect_max: f64,
    pub keyid_residual_max: f64,
}

/// Parses the text of a diagnostics CSV.
pub fn parse_diagnostics(text: &str) -> Result<(RunMeta, Vec<DiagnosticsRecord>, Option<String>), ExperimentError> {
    let bad = |m: String| ExperimentError::Malformed(m);
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l.trim_start_matches('#').trim() == DIAGNOSTICS_VERSION => {}
        _ => return Err(bad(format!("first line must be `# {DIAGNOSTICS_VERSION}`"))),
    }
    let meta_line = lines.next().and_then(|l| l.strip_prefix("# meta ")).ok_or_else(|| bad("missing `# meta` line".into()))?;
    let (mut h2, mut m, mut seed) = (None, None, None);
    for word in meta_line.split_whitespace() {
        match word.split_once('=') {
            Some(("h2", v)) => h2 = v.parse::<f64>().ok(),
            Some(("m", v)) => m = v.parse::<f64>().ok(),
            Some(("seed", v)) => seed = v.parse::<u64>().ok(),
            _ => return Err(bad(format!("unexpected meta entry `{word}`"))),
        }
    }
    let (Some(h_squared), Some(m), Some(seed)) = (h2, m, seed) else {
        return Err(bad("meta line needs h2, m and seed".into()));
    };
    let failure = text
        .lines()
        .rev()
        .find_map(|l| l.strip_prefix("# status=dt-collapse"))
        .map(|s| s.trim().to_string());

    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let records = reader
        .deserialize::<DiagnosticsRecord>()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| bad(e.to_string()))?;
    if records.is_empty() {
        return Err(bad("no diagnostics rows".into()));
    }
    Ok((RunMeta { h_squared, m, seed }, records, failure))
}

pub fn analyze(dir: &Path) -> Result<AnalysisReport, ExperimentError> {
    let path = dir.join("diagnostics.csv");
    if !path.is_file() {
        return Err(ExperimentError::MissingDiagnostics(path));
    }
    let text = std::fs::read_to_string(&path).map_err(|e| ExperimentError::io(&path, e))?;
    let (meta, records, failure) = parse_diagnostics(&text)?;
    Ok(report(meta, records, failure))
}

pub fn report(meta: RunMeta, records: Vec<DiagnosticsRecord>, failure: Option<String>) -> AnalysisReport {
    let verdict = derive_verdict(&records, failure.is_some());
    let first = records[0];
    let late: Vec<&DiagnosticsRecord> = records.iter().filter(|r| r.t >= 1.0).collect();
    let fold_max = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::NEG_INFINITY, f64::max);
    let fold_min = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::INFINITY, f64::min);
    AnalysisReport {
        meta,
        failure,
        verdict,
        lyapunov_violations: lyapunov_violations(&records, meta.h_squared),
        lyapunov_min: fold_min(&mut records.iter().map(|r| r.lyapunov)),
        lyapunov_initial: first.lyapunov,
        dissipation_integral: records.last().map_or(0.0, |r| r.dissipation_integral),
        mass_drift: fold_max(&mut records.iter().map(|r| (r.mass_total - first.mass_total).abs() / first.mass_total)),
        min_v: fold_min(&mut records.iter().map(|r| r.min_v)),
        ratio_upper_max: (!late.is_empty()).then(|| fold_max(&mut late.iter().map(|r| r.ratio_upper))),
        ratio_lower_min: (!late.is_empty()).then(|| fold_min(&mut late.iter().map(|r| r.ratio_lower))),
        sandwich_defect_max: fold_max(&mut records.iter().map(|r| r.sandwich_defect)),
        keyid_residual_max: fold_max(&mut records.iter().map(|r| r.keyid_residual)),
        records,
    }
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let last = self.records.last().expect("report has records");
        writeln!(f, "verdict: {}", self.verdict.summary())?;
        if let Some(msg) = &self.failure {
            writeln!(f, "failure: {msg}")?;
        }
        writeln!(f, "records: {} (t = {} .. {})", self.records.len(), self.records[0].t, last.t)?;
        writeln!(f, "homogeneous level m: {}", self.meta.m)?;
        writeln!(f, "final metric: {:e}", self.verdict.final_metric)?;
        match self.verdict.fit {
            Some(fit) => writeln!(f, "fitted rate: delta={:e} r2={}", fit.delta, fit.r_squared)?,
            None => writeln!(f, "fitted rate: none")?,
        }
        writeln!(f, "max u growth: {:e}", self.verdict.growth)?;
        writeln!(f, "trailing max u variation: {:e}", self.verdict.trailing_variation)?;
        writeln!(f, "lyapunov: initial={:e} min={:e} violations={}", self.lyapunov_initial, self.lyapunov_min, self.lyapunov_violations)?;
        writeln!(f, "dissipation integral: {:e}", self.dissipation_integral)?;
        writeln!(f, "mass drift: {:e}", self.mass_drift)?;
        writeln!(f, "min v: {:e}", self.min_v)?;
        match (self.ratio_upper_max, self.ratio_lower_min) {
            (Some(up), Some(lo)) => writeln!(f, "comparison ratios (t >= 1): max v/w={up} min v/S={lo}")?,
            _ => writeln!(f, "comparison ratios (t >= 1): no records")?,
        }
        writeln!(f, "sandwich defect: {:e}", self.sandwich_defect_max)?;
        write!(f, "key identity residual: {:e}", self.keyid_residual_max)
    }
}
