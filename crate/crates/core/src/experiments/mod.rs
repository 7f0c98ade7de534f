//! Configured runs, parameter sweeps, persistence and post-hoc analysis.

pub mod analyze;
pub mod config;
pub mod run;
pub mod snapshot;
pub mod sweep;

pub use analyze::{analyze, AnalysisReport};
pub use config::{Cadence, ConfigError, ConfigErrors, ExperimentConfig, GridSpec, ModelSource, OutputSpec};
pub use run::{derive_verdict, run_experiment, RunArtifacts, Verdict, VerdictReport};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot, SnapshotError};
pub use sweep::{sweep, SweepRow, SweepSummary};

use crate::diagnostics::DiagnosticsError;
use crate::grid::GridError;
use crate::solver::InitError;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration:\n{0}")]
    Config(#[from] ConfigErrors),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Init(#[from] InitError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Snapshot { path: PathBuf, source: SnapshotError },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed diagnostics: {0}")]
    Malformed(String),
    #[error("no diagnostics.csv at {}", .0.display())]
    MissingDiagnostics(PathBuf),
    #[error("sweep needs at least one value")]
    EmptySweep,
    #[error("bad sweep axis {0}")]
    BadAxis(String),
}

impl ExperimentError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        ExperimentError::Io { path: path.to_path_buf(), source }
    }
}

/// Scenario presets shipped with the crate, as `(name, config text)`.
pub const PRESETS: [(&str, &str); 5] = [
    ("subcritical-2d", include_str!("../../presets/subcritical-2d.ini")),
    ("supercritical-2d", include_str!("../../presets/supercritical-2d.ini")),
    ("stabilization-k-half", include_str!("../../presets/stabilization-k-half.ini")),
    ("power-law-boundedness-k15-1d", include_str!("../../presets/power-law-boundedness-k15-1d.ini")),
    ("science-stripes", include_str!("../../presets/science-stripes.ini")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.1)
}
