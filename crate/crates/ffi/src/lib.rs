//! C interface to `chemosim`.
//!
//! Objects are opaque handles created and destroyed by this library. Every
//! fallible call returns a [`ChemosimStatus`]; on failure a message is kept
//! per thread and can be read with [`chemosim_last_error`]. Panics never
//! cross the boundary.

use chemosim::experiments::{run_experiment, ExperimentConfig, ExperimentError, Verdict};
use chemosim::kinetics::ModelParams;
use chemosim::solver::{init_state, State, StepError, TimeStepper};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChemosimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ConfigError = 3,
    SolverError = 4,
    IoError = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChemosimField {
    U = 0,
    V = 1,
    N = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChemosimVerdict {
    Converged = 0,
    Bounded = 1,
    Aggregating = 2,
    DtCollapse = 3,
    Inconclusive = 4,
}

impl From<Verdict> for ChemosimVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Converged => ChemosimVerdict::Converged,
            Verdict::Bounded => ChemosimVerdict::Bounded,
            Verdict::Aggregating => ChemosimVerdict::Aggregating,
            Verdict::DtCollapse => ChemosimVerdict::DtCollapse,
            Verdict::Inconclusive => ChemosimVerdict::Inconclusive,
        }
    }
}

/// Parsed experiment configuration.
pub struct ChemosimConfig {
    inner: ExperimentConfig,
}

/// A simulation advanced step by step from the caller.
pub struct ChemosimSim {
    state: State,
    params: ModelParams,
    stepper: TimeStepper,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn guard(f: impl FnOnce() -> Result<(), (ChemosimStatus, String)>) -> ChemosimStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ChemosimStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ChemosimStatus::Panic
        }
    }
}

fn null(what: &str) -> (ChemosimStatus, String) {
    (ChemosimStatus::NullPointer, format!("{what} is null"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (ChemosimStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (ChemosimStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn step_status(e: StepError) -> (ChemosimStatus, String) {
    (ChemosimStatus::SolverError, e.to_string())
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn chemosim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn chemosim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses configuration text. On success `*out` owns a new handle that must
/// be released with [`chemosim_config_free`].
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chemosim_config_parse(text: *const c_char, out: *mut *mut ChemosimConfig) -> ChemosimStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = c_str(text, "text")?;
        let inner = ExperimentConfig::parse(text).map_err(|e| (ChemosimStatus::ConfigError, e.to_string()))?;
        *out = Box::into_raw(Box::new(ChemosimConfig { inner }));
        Ok(())
    })
}

/// Copies the bundled scenario `name` into a new config handle.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chemosim_config_preset(name: *const c_char, out: *mut *mut ChemosimConfig) -> ChemosimStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let name = c_str(name, "name")?;
        let text = chemosim::experiments::preset(name)
            .ok_or_else(|| (ChemosimStatus::InvalidArgument, format!("unknown preset `{name}`")))?;
        let inner = ExperimentConfig::parse(text).map_err(|e| (ChemosimStatus::ConfigError, e.to_string()))?;
        *out = Box::into_raw(Box::new(ChemosimConfig { inner }));
        Ok(())
    })
}

/// Overrides one `section.key` entry, revalidating the whole config. The
/// handle is unchanged on failure.
///
/// # Safety
/// `config` must come from this library; `path` and `value` must be
/// NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn chemosim_config_set(
    config: *mut ChemosimConfig,
    path: *const c_char,
    value: *const c_char,
) -> ChemosimStatus {
    guard(|| {
        let config = config.as_mut().ok_or_else(|| null("config"))?;
        let (path, value) = (c_str(path, "path")?, c_str(value, "value")?);
        config.inner = config
            .inner
            .with_override(path, value)
            .map_err(|e| (ChemosimStatus::ConfigError, e.to_string()))?;
        Ok(())
    })
}

/// # Safety
/// `config` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn chemosim_config_free(config: *mut ChemosimConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the full experiment into `out_dir` (or the config's own directory
/// when `out_dir` is null) and reports the verdict. A solver failure still
/// writes artifacts and returns `SOLVER_ERROR` with `*verdict` set to
/// `DT_COLLAPSE`.
///
/// # Safety
/// `config` must come from this library, `out_dir` must be null or a
/// NUL-terminated string, and `verdict` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chemosim_run_experiment(
    config: *const ChemosimConfig,
    out_dir: *const c_char,
    verdict: *mut ChemosimVerdict,
) -> ChemosimStatus {
    guard(|| {
        let config = config.as_ref().ok_or_else(|| null("config"))?;
        if verdict.is_null() {
            return Err(null("verdict"));
        }
        let mut cfg = config.inner.clone();
        if !out_dir.is_null() {
            cfg.output.dir = PathBuf::from(c_str(out_dir, "out_dir")?);
        }
        let artifacts = run_experiment(&cfg).map_err(|e| match e {
            ExperimentError::Io { .. } | ExperimentError::Snapshot { .. } | ExperimentError::Csv(_) => {
                (ChemosimStatus::IoError, e.to_string())
            }
            ExperimentError::Diagnostics(_) => (ChemosimStatus::SolverError, e.to_string()),
            _ => (ChemosimStatus::ConfigError, e.to_string()),
        })?;
        *verdict = artifacts.verdict.verdict.into();
        match artifacts.failure {
            Some(msg) => Err((ChemosimStatus::SolverError, msg)),
            None => Ok(()),
        }
    })
}

/// Creates a simulation at the initial state described by `config`.
///
/// # Safety
/// `config` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chemosim_sim_new(config: *const ChemosimConfig, out: *mut *mut ChemosimSim) -> ChemosimStatus {
    guard(|| {
        let config = config.as_ref().ok_or_else(|| null("config"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = &config.inner;
        let grid = c.grid.build().map_err(|e| (ChemosimStatus::ConfigError, e.to_string()))?;
        let state = init_state(&grid, &c.initial).map_err(|e| (ChemosimStatus::ConfigError, e.to_string()))?;
        let stepper = TimeStepper::new(c.controls).map_err(|e| (ChemosimStatus::ConfigError, e.to_string()))?;
        *out = Box::into_raw(Box::new(ChemosimSim { state, params: c.params(), stepper }));
        Ok(())
    })
}

/// # Safety
/// `sim` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn chemosim_sim_free(sim: *mut ChemosimSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances the simulation to time `t`. On failure the simulation keeps the
/// last accepted state.
///
/// # Safety
/// `sim` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn chemosim_sim_advance(sim: *mut ChemosimSim, t: f64) -> ChemosimStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(|| null("sim"))?;
        if !t.is_finite() || t < sim.state.t {
            return Err((ChemosimStatus::InvalidArgument, format!("target time {t} is before the current time {}", sim.state.t)));
        }
        while sim.state.t < t {
            let (next, _) = sim.stepper.advance(&sim.state, &sim.params, t).map_err(step_status)?;
            sim.state = next;
        }
        Ok(())
    })
}

/// # Safety
/// `sim` must come from this library and `t` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chemosim_sim_time(sim: *const ChemosimSim, t: *mut f64) -> ChemosimStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("sim"))?;
        *t.as_mut().ok_or_else(|| null("t"))? = sim.state.t;
        Ok(())
    })
}

/// Cell counts per axis; `ny` is 1 for one-dimensional grids.
///
/// # Safety
/// `sim` must come from this library; `nx` and `ny` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn chemosim_sim_shape(sim: *const ChemosimSim, nx: *mut usize, ny: *mut usize) -> ChemosimStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("sim"))?;
        let g = sim.state.grid();
        *nx.as_mut().ok_or_else(|| null("nx"))? = g.nx();
        *ny.as_mut().ok_or_else(|| null("ny"))? = g.ny();
        Ok(())
    })
}

/// `∫(u + n)` of the current state.
///
/// # Safety
/// `sim` must come from this library and `mass` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chemosim_sim_total_mass(sim: *const ChemosimSim, mass: *mut f64) -> ChemosimStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("sim"))?;
        *mass.as_mut().ok_or_else(|| null("mass"))? = sim.state.total_mass();
        Ok(())
    })
}

/// Copies one field, row-major, into `buf`, which must hold exactly
/// `nx·ny` values.
///
/// # Safety
/// `sim` must come from this library and `buf` point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn chemosim_sim_copy_field(
    sim: *const ChemosimSim,
    field: ChemosimField,
    buf: *mut f64,
    len: usize,
) -> ChemosimStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("sim"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let f = match field {
            ChemosimField::U => &sim.state.u,
            ChemosimField::V => &sim.state.v,
            ChemosimField::N => &sim.state.n,
        };
        if len != f.len() {
            return Err((ChemosimStatus::InvalidArgument, format!("buffer holds {len} values, field has {}", f.len())));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(f.values());
        Ok(())
    })
}
