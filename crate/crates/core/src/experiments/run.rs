//! Running one configured experiment and judging its outcome.

use super::config::{Cadence, ExperimentConfig};
use super::snapshot::write_snapshot;
use super::ExperimentError;
use crate::diagnostics::{fit_exponential_rate, DiagnosticsError, DiagnosticsRecord, Monitor, RateFit};
use crate::solver::{init_state, run, StepError};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

/// Version tag written on the first line of every diagnostics CSV.
pub const DIAGNOSTICS_VERSION: &str = "chemosim-diagnostics v1";

/// Sum of the three sup-norm distances to equilibrium below which a run
/// counts as converged.
pub const CONVERGED_THRESHOLD: f64 = 1e-3;
pub const MIN_R_SQUARED: f64 = 0.9;
/// Largest relative spread of `max u` over the second half of a bounded run.
pub const BOUNDED_VARIATION: f64 = 0.1;
/// Growth of `max u` over its initial value that signals aggregation.
pub const AGGREGATION_FACTOR: f64 = 10.0;
/// Fraction of the record span used for the rate fit.
pub const FIT_WINDOW: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Converged,
    Bounded,
    Aggregating,
    DtCollapse,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Converged => "converged",
            Verdict::Bounded => "bounded",
            Verdict::Aggregating => "aggregating",
            Verdict::DtCollapse => "dt-collapse",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "converged" => Verdict::Converged,
            "bounded" => Verdict::Bounded,
            "aggregating" => Verdict::Aggregating,
            "dt-collapse" => Verdict::DtCollapse,
            "inconclusive" => Verdict::Inconclusive,
            other => return Err(format!("unknown verdict `{other}`")),
        })
    }
}

/// A verdict with the numbers it was decided from.
#[derive(Debug, Clone, PartialEq)]
pub struct VerdictReport {
    pub verdict: Verdict,
    /// Exponential fit of `‖n‖∞` over the trailing window.
    pub fit: Option<RateFit>,
    /// `‖u−m‖∞ + ‖v−m‖∞ + ‖n‖∞` at the last record.
    pub final_metric: f64,
    /// `(max − min)/max` of `max u` over the second half of the records.
    pub trailing_variation: f64,
    /// Largest `max u` seen divided by the initial one.
    pub growth: f64,
}

impl VerdictReport {
    /// `converged(δ̂=…)` for converged runs, the bare verdict otherwise.
    pub fn summary(&self) -> String {
        match (self.verdict, self.fit) {
            (Verdict::Converged, Some(fit)) => format!("converged(δ̂={:.6e})", fit.delta),
            (v, _) => v.to_string(),
        }
    }
}

/// Decides the verdict from a record series alone; `failed` marks a run
/// that stopped early on a solver failure.
pub fn derive_verdict(records: &[DiagnosticsRecord], failed: bool) -> VerdictReport {
    let Some(last) = records.last() else {
        return VerdictReport {
            verdict: if failed { Verdict::DtCollapse } else { Verdict::Inconclusive },
            fit: None,
            final_metric: f64::NAN,
            trailing_variation: f64::NAN,
            growth: f64::NAN,
        };
    };
    let final_metric = last.linf_u_minus_m + last.linf_v_minus_m + last.linf_n;
    let initial_max = records[0].max_u;
    let growth = records.iter().map(|r| r.max_u).fold(0.0, f64::max) / initial_max;
    let t_mid = 0.5 * (records[0].t + last.t);
    let (lo, hi) = records
        .iter()
        .filter(|r| r.t >= t_mid)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.max_u), hi.max(r.max_u)));
    let trailing_variation = (hi - lo) / hi;
    let fit = rate_fit(records);

    let verdict = if failed {
        Verdict::DtCollapse
    } else if growth > AGGREGATION_FACTOR {
        Verdict::Aggregating
    } else if final_metric < CONVERGED_THRESHOLD && fit.is_some_and(|f| f.delta > 0.0 && f.r_squared >= MIN_R_SQUARED) {
        Verdict::Converged
    } else if trailing_variation < BOUNDED_VARIATION {
        Verdict::Bounded
    } else {
        Verdict::Inconclusive
    };
    VerdictReport { verdict, fit, final_metric, trailing_variation, growth }
}

/// Fits the decay of `‖n‖∞`; `None` when there is no nutrient to fit or
/// too few positive points in the window.
pub fn rate_fit(records: &[DiagnosticsRecord]) -> Option<RateFit> {
    let series: Vec<(f64, f64)> = records.iter().map(|r| (r.t, r.linf_n)).filter(|p| p.1 > 0.0).collect();
    fit_exponential_rate(&series, FIT_WINDOW).ok()
}

/// Everything a run leaves on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub config_path: PathBuf,
    pub diagnostics_path: PathBuf,
    pub snapshot_paths: Vec<PathBuf>,
    pub verdict_path: PathBuf,
    pub verdict: VerdictReport,
    /// Set when the solver stopped before `t_end`.
    pub failure: Option<String>,
    pub records: Vec<DiagnosticsRecord>,
    pub steps: usize,
}

/// Metadata line stored in the CSV so it can be analyzed without the config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMeta {
    pub h_squared: f64,
    pub m: f64,
    pub seed: u64,
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord], meta: &RunMeta, failure: Option<&str>) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?).expect("csv output is UTF-8");
    let mut out = format!("# {DIAGNOSTICS_VERSION}\n# meta h2={} m={} seed={}\n", meta.h_squared, meta.m, meta.seed);
    out.push_str(&body);
    if let Some(msg) = failure {
        out.push_str(&format!("# status=dt-collapse {}\n", msg.replace('\n', " ")));
    }
    Ok(out)
}

/// Runs the experiment into `config.output.dir`.
///
/// A solver failure (or a diagnostics solve failing mid-run) is not an
/// error: the artifacts are written up to the failure and the verdict is
/// `dt-collapse`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunArtifacts, ExperimentError> {
    let dir = config.output.dir.clone();
    fs::create_dir_all(&dir).map_err(|e| ExperimentError::io(&dir, e))?;
    let grid = config.grid.build()?;
    let params = config.params();
    let initial = init_state(&grid, &config.initial)?;
    let meta = RunMeta { h_squared: grid.h_squared(), m: initial.total_mass() / grid.measure(), seed: config.initial.seed };

    let config_path = dir.join("config.ini");
    write(&config_path, config.serialize())?;

    let mut monitor = Monitor::new(&initial, &params)?;
    let mut diag_error: Option<DiagnosticsError> = None;
    let t_end = config.t_end;
    let (every, steps_every) = match config.output.cadence {
        Cadence::Time(e) => (Some(e), None),
        Cadence::Steps(k) => (None, Some(k)),
    };
    let outcome = run(initial, &params, &config.controls, t_end, every, |ev| {
        let take = match steps_every {
            Some(k) => ev.step % k == 0 || ev.next.t >= t_end,
            None => ev.at_output,
        };
        monitor.observe(ev, take).map(|_| ()).map_err(|e| {
            diag_error = Some(e);
            StepError::BadControls("diagnostics failed".into())
        })
    });
    let (final_state, steps, failure) = match outcome {
        Ok(s) => (s.state, s.steps, None),
        Err(f) => {
            let msg = match diag_error {
                Some(e) => format!("diagnostics failed at t = {}: {e}", f.last_good.t),
                None => f.error.to_string(),
            };
            (f.last_good, f.steps, Some(msg))
        }
    };

    let records = monitor.into_records();
    let diagnostics_path = dir.join("diagnostics.csv");
    write(&diagnostics_path, diagnostics_csv(&records, &meta, failure.as_deref())?)?;

    let mut snapshot_paths = Vec::new();
    if config.output.snapshots {
        for (name, field) in [("u", &final_state.u), ("v", &final_state.v), ("n", &final_state.n)] {
            let path = dir.join(format!("{name}.snap"));
            write_snapshot(&path, name, final_state.t, field).map_err(|e| ExperimentError::Snapshot { path: path.clone(), source: e })?;
            snapshot_paths.push(path);
        }
    }

    let verdict = derive_verdict(&records, failure.is_some());
    let verdict_path = dir.join("verdict.txt");
    let mut text = format!(
        "verdict: {}\nscenario: {}\nsteps: {steps}\nfinal time: {}\nfinal metric: {:e}\ntrailing variation: {:e}\ngrowth: {:e}\n",
        verdict.summary(),
        config.output.scenario,
        final_state.t,
        verdict.final_metric,
        verdict.trailing_variation,
        verdict.growth,
    );
    if let Some(fit) = verdict.fit {
        text.push_str(&format!("fit: delta={:e} r2={}\n", fit.delta, fit.r_squared));
    }
    if let Some(msg) = &failure {
        text.push_str(&format!("failure: {msg}\n"));
    }
    write(&verdict_path, text)?;

    Ok(RunArtifacts {
        dir,
        config_path,
        diagnostics_path,
        snapshot_paths,
        verdict_path,
        verdict,
        failure,
        records,
        steps,
    })
}

fn write(path: &Path, contents: String) -> Result<(), ExperimentError> {
    fs::write(path, contents).map_err(|e| ExperimentError::io(path, e))
}
