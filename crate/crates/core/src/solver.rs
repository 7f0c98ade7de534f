//! Semi-implicit time stepping.
//!
//! One step of size `dt` from `(uⁿ, vⁿ, nⁿ)`:
//!
//! 1. nutrient: `(1/dt + c) n' - Δn' = nⁿ/dt` with `c = uⁿ f(nⁿ)/nⁿ >= 0`;
//!    the consumed amount is `q = c n'`.
//! 2. cells: with `p = γ(vⁿ) u'`, solve `p/(γ(vⁿ) dt) - Δp = uⁿ/dt + q`.
//! 3. signal: `(τ/dt + β) v' - Δv' = τ vⁿ/dt + u'`.
//!
//! The cell source equals the nutrient sink cell by cell, so `∫(u + n)` is
//! conserved up to the linear solver residual. Every operator is an M-matrix
//! with non-negative data, so `u, n >= 0` and `v > 0` hold without clipping;
//! a negative value is reported as an error.

use crate::elliptic::{weighted_helmholtz_into, CgScratch, EllipticSolveOptions, SolveError};
use crate::grid::{laplacian_into, Field, Grid};
use crate::kinetics::ModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Linear solver tolerance used inside time steps. Tight enough that mass
/// drift over 10⁴ steps stays far below 1e-9 relative.
pub const STEP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Field,
    pub v: Field,
    pub n: Field,
    pub t: f64,
}

impl State {
    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    /// `∫(u + n)`
    pub fn total_mass(&self) -> f64 {
        crate::grid::integrate(&self.u) + crate::grid::integrate(&self.n)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InitError {
    #[error("initial signal must be positive everywhere (min {0})")]
    NonPositiveSignal(f64),
    #[error("initial cell density vanishes identically")]
    ZeroDensity,
    #[error("initial {field} must be non-negative (min {min})")]
    Negative { field: &'static str, min: f64 },
    #[error("{0}")]
    BadProfile(String),
}

/// Initial profile of one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Constant(f64),
    /// `base · (1 + amplitude · ξ)` with `ξ` uniform on `[-1, 1)` per cell.
    Noise { base: f64, amplitude: f64 },
    /// `background` plus a Gaussian of standard deviation `width` centered at
    /// `center`, scaled so the discrete integral of the whole profile is
    /// exactly `total_mass`.
    Bump { background: f64, total_mass: f64, width: f64, center: [f64; 2] },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialSpec {
    pub u: Profile,
    pub v: Profile,
    pub n: Profile,
    pub seed: u64,
}

impl InitialSpec {
    pub fn constant(u: f64, v: f64, n: f64) -> Self {
        Self { u: Profile::Constant(u), v: Profile::Constant(v), n: Profile::Constant(n), seed: 0 }
    }
}

fn realize(grid: &Grid, profile: &Profile, rng: &mut ChaCha8Rng) -> Result<Field, InitError> {
    match *profile {
        Profile::Constant(c) => {
            if !c.is_finite() {
                return Err(InitError::BadProfile(format!("constant {c} is not finite")));
            }
            Ok(Field::constant(grid, c))
        }
        Profile::Noise { base, amplitude } => {
            if !(base.is_finite() && (0.0..1.0).contains(&amplitude)) {
                return Err(InitError::BadProfile(format!(
                    "noise needs a finite base and amplitude in [0, 1), got base {base}, amplitude {amplitude}"
                )));
            }
            let values = (0..grid.len()).map(|_| base * (1.0 + amplitude * rng.random_range(-1.0..1.0))).collect();
            Ok(Field::from_raw(grid, values))
        }
        Profile::Bump { background, total_mass, width, center } => {
            let bump_mass = total_mass - background * grid.measure();
            if !(width > 0.0 && width.is_finite()) {
                return Err(InitError::BadProfile(format!("bump width must be > 0, got {width}")));
            }
            if !(background >= 0.0 && bump_mass > 0.0 && bump_mass.is_finite()) {
                return Err(InitError::BadProfile(format!(
                    "bump mass {total_mass} must exceed the background mass {}",
                    background * grid.measure()
                )));
            }
            let dim = grid.dim();
            let shape = Field::from_fn(grid, |x, y| {
                let dy = if dim == 2 { y - center[1] } else { 0.0 };
                let r2 = (x - center[0]).powi(2) + dy * dy;
                (-0.5 * r2 / (width * width)).exp()
            });
            let norm = crate::grid::integrate(&shape);
            if !(norm > 0.0) {
                return Err(InitError::BadProfile("bump lies entirely outside the domain".into()));
            }
            Ok(shape.map(|g| background + bump_mass * g / norm))
        }
    }
}

/// Builds the initial state; noise for `u`, `v`, `n` is drawn in that order
/// from one stream seeded by `spec.seed`.
pub fn init_state(grid: &Grid, spec: &InitialSpec) -> Result<State, InitError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let u = realize(grid, &spec.u, &mut rng)?;
    let v = realize(grid, &spec.v, &mut rng)?;
    let n = realize(grid, &spec.n, &mut rng)?;
    if u.min() < 0.0 {
        return Err(InitError::Negative { field: "u", min: u.min() });
    }
    if n.min() < 0.0 {
        return Err(InitError::Negative { field: "n", min: n.min() });
    }
    if !(v.min() > 0.0) {
        return Err(InitError::NonPositiveSignal(v.min()));
    }
    if u.max() == 0.0 {
        return Err(InitError::ZeroDensity);
    }
    Ok(State { u, v, n, t: 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControls {
    pub dt: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub adapt: bool,
    /// Largest accepted relative change of any field per step, in `L∞`.
    pub max_rel_change: f64,
}

impl Default for StepControls {
    fn default() -> Self {
        Self { dt: 1e-2, dt_min: 1e-8, dt_max: 1.0, adapt: true, max_rel_change: 0.1 }
    }
}

impl StepControls {
    pub fn fixed(dt: f64) -> Self {
        Self { dt, dt_min: dt, dt_max: dt, adapt: false, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), StepError> {
        let ok = self.dt_min > 0.0
            && self.dt_min <= self.dt
            && self.dt <= self.dt_max
            && self.dt_max.is_finite()
            && self.max_rel_change > 0.0;
        if ok {
            Ok(())
        } else {
            Err(StepError::BadControls(format!(
                "need 0 < dt_min <= dt <= dt_max and max_rel_change > 0 (dt_min {}, dt {}, dt_max {}, max_rel_change {})",
                self.dt_min, self.dt, self.dt_max, self.max_rel_change
            )))
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("{field} became negative ({value:.3e} at cell {index})")]
    Negative { field: &'static str, index: usize, value: f64 },
    #[error("{0} is not finite")]
    NonFinite(&'static str),
    #[error("time step collapsed below dt_min at t = {t} (dt = {dt:.3e})")]
    DtCollapse { t: f64, dt: f64 },
    #[error("invalid step controls: {0}")]
    BadControls(String),
}

fn check_sign(field: &'static str, values: &[f64], strict: bool) -> Result<(), StepError> {
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(StepError::NonFinite(field));
        }
        if value < 0.0 || (strict && value == 0.0) {
            return Err(StepError::Negative { field, index, value });
        }
    }
    Ok(())
}

/// Work buffers for [`step_with`], kept by [`TimeStepper`] between steps.
#[derive(Debug, Clone, Default)]
struct StepScratch {
    coeff: Vec<f64>,
    gamma: Vec<f64>,
    sigma: Vec<f64>,
    rhs: Vec<f64>,
    p: Vec<f64>,
    cg: CgScratch,
}

fn refill(buf: &mut Vec<f64>, values: impl Iterator<Item = f64>) {
    buf.clear();
    buf.extend(values);
}

/// One step of fixed size `dt` (see the module documentation).
pub fn step_with(state: &State, params: &ModelParams, dt: f64, opts: &EllipticSolveOptions) -> Result<State, StepError> {
    step_in(state, params, dt, opts, &mut StepScratch::default())
}

fn step_in(
    state: &State,
    params: &ModelParams,
    dt: f64,
    opts: &EllipticSolveOptions,
    ws: &mut StepScratch,
) -> Result<State, StepError> {
    let grid = state.grid();
    let (u, v, n) = (state.u.values(), state.v.values(), state.n.values());
    let inv_dt = 1.0 / dt;

    refill(&mut ws.coeff, u.iter().zip(n).map(|(&u, &n)| u * params.consumption.eval(n).f_over_s));
    refill(&mut ws.sigma, ws.coeff.iter().map(|c| inv_dt + c));
    refill(&mut ws.rhs, n.iter().map(|n| n * inv_dt));
    let mut n_next = n.to_vec();
    weighted_helmholtz_into(grid, &ws.sigma, &ws.rhs, &mut n_next, opts, &mut ws.cg)?;
    check_sign("n", &n_next, false)?;

    refill(&mut ws.gamma, v.iter().map(|&s| params.motility.gamma(s)));
    refill(&mut ws.sigma, ws.gamma.iter().map(|g| inv_dt / g));
    // consumed nutrient becomes the cell source
    refill(&mut ws.rhs, ws.coeff.iter().zip(&n_next).zip(u).map(|((c, n), u)| c * n + u * inv_dt));
    refill(&mut ws.p, ws.gamma.iter().zip(u).map(|(g, u)| g * u));
    weighted_helmholtz_into(grid, &ws.sigma, &ws.rhs, &mut ws.p, opts, &mut ws.cg)?;
    let u_next: Vec<f64> = ws.p.iter().zip(&ws.gamma).map(|(p, g)| p / g).collect();
    check_sign("u", &u_next, false)?;

    let shift = params.tau * inv_dt + params.beta;
    refill(&mut ws.sigma, v.iter().map(|_| shift));
    refill(&mut ws.rhs, v.iter().zip(&u_next).map(|(v, u)| params.tau * inv_dt * v + u));
    let mut v_next = v.to_vec();
    weighted_helmholtz_into(grid, &ws.sigma, &ws.rhs, &mut v_next, opts, &mut ws.cg)?;
    check_sign("v", &v_next, true)?;

    Ok(State {
        u: Field::from_raw(grid, u_next),
        v: Field::from_raw(grid, v_next),
        n: Field::from_raw(grid, n_next),
        t: state.t + dt,
    })
}

/// One step of size `controls.dt` at the default stepping tolerance.
pub fn step(state: &State, params: &ModelParams, controls: &StepControls) -> Result<State, StepError> {
    controls.validate()?;
    step_with(state, params, controls.dt, &EllipticSolveOptions::with_tolerance(STEP_TOLERANCE))
}

fn sup(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Relative `L∞` change, the largest over the three fields.
pub fn relative_change(before: &State, after: &State) -> f64 {
    let pairs = [(&before.u, &after.u), (&before.v, &after.v), (&before.n, &after.n)];
    pairs
        .iter()
        .map(|(a, b)| {
            let diff = a.values().iter().zip(b.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            let scale = sup(a.values());
            if scale > 0.0 {
                diff / scale
            } else if diff > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Step size suggested by the explicit rates of change:
/// `max_rel_change / max(max f(n), ‖Δ(uγ(v)) + u f(n)‖∞ / ‖u‖∞)`,
/// clamped to `[dt_min, dt_max]`.
pub fn stable_dt(state: &State, params: &ModelParams, controls: &StepControls) -> f64 {
    let grid = state.grid();
    let (u, v, n) = (state.u.values(), state.v.values(), state.n.values());
    let flux: Vec<f64> = u.iter().zip(v).map(|(u, v)| u * params.motility.gamma(*v)).collect();
    let mut lap = vec![0.0; grid.len()];
    laplacian_into(grid, &flux, &mut lap);
    let mut f_max = 0.0f64;
    let mut rate = 0.0f64;
    for k in 0..grid.len() {
        let f = params.consumption.eval(n[k]).f;
        f_max = f_max.max(f);
        rate = rate.max((lap[k] + u[k] * f).abs());
    }
    let u_sup = sup(u);
    let denom = f_max.max(if u_sup > 0.0 { rate / u_sup } else { 0.0 });
    if !(denom > 0.0) {
        return controls.dt_max;
    }
    (controls.max_rel_change / denom).clamp(controls.dt_min, controls.dt_max)
}

const GROWTH: f64 = 1.2;
const GROWTH_STREAK: usize = 5;

/// Adaptive step-size controller.
#[derive(Debug, Clone)]
pub struct TimeStepper {
    controls: StepControls,
    opts: EllipticSolveOptions,
    dt: f64,
    streak: usize,
    rejected: usize,
    scratch: StepScratch,
}

impl TimeStepper {
    pub fn new(controls: StepControls) -> Result<Self, StepError> {
        controls.validate()?;
        Ok(Self {
            controls,
            opts: EllipticSolveOptions::with_tolerance(STEP_TOLERANCE),
            dt: controls.dt,
            streak: 0,
            rejected: 0,
            scratch: StepScratch::default(),
        })
    }

    pub fn with_solver_options(mut self, opts: EllipticSolveOptions) -> Self {
        self.opts = opts;
        self
    }

    /// Current nominal step size.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    /// Takes one accepted step without passing `t_limit`; returns the new
    /// state and the step size used.
    pub fn advance(&mut self, state: &State, params: &ModelParams, t_limit: f64) -> Result<(State, f64), StepError> {
        let remaining = t_limit - state.t;
        loop {
            let mut dt = self.dt;
            if self.controls.adapt {
                dt = dt.min(stable_dt(state, params, &self.controls));
            }
            let clipped = dt >= remaining;
            if clipped {
                dt = remaining;
            }
            let attempt = step_in(state, params, dt, &self.opts, &mut self.scratch);
            if !self.controls.adapt {
                let mut next = attempt?;
                if clipped {
                    next.t = t_limit;
                }
                return Ok((next, dt));
            }
            let accepted = match attempt {
                Ok(next) if relative_change(state, &next) <= self.controls.max_rel_change => Some(next),
                Ok(_) => None,
                Err(
                    StepError::Negative { .. }
                    | StepError::NonFinite(_)
                    | StepError::Solve(SolveError::NotConverged { .. } | SolveError::NonPositiveWeight { .. }),
                ) => None,
                Err(e) => return Err(e),
            };
            match accepted {
                Some(mut next) => {
                    if clipped {
                        next.t = t_limit;
                    } else {
                        self.dt = dt;
                    }
                    self.streak += 1;
                    if self.streak >= GROWTH_STREAK {
                        self.dt = (self.dt * GROWTH).min(self.controls.dt_max);
                        self.streak = 0;
                    }
                    return Ok((next, dt));
                }
                None => {
                    self.rejected += 1;
                    self.streak = 0;
                    self.dt = 0.5 * dt;
                    if self.dt < self.controls.dt_min {
                        return Err(StepError::DtCollapse { t: state.t, dt: self.dt });
                    }
                }
            }
        }
    }
}

/// An accepted step as seen by a [`run`] hook.
#[derive(Debug, Clone, Copy)]
pub struct StepEvent<'a> {
    pub prev: &'a State,
    pub next: &'a State,
    pub dt: f64,
    /// Number of accepted steps so far, including this one.
    pub step: usize,
    /// Set when `next.t` is an output time of the cadence passed to [`run`].
    pub at_output: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub state: State,
    pub steps: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("run failed at t = {}: {error}", last_good.t)]
pub struct RunFailure {
    pub last_good: State,
    pub error: StepError,
    pub steps: usize,
}

/// Advances to `t_end`, calling `hook` after every accepted step. With
/// `output_every = Some(Δ)`, steps are shortened to land exactly on the
/// multiples of `Δ`, which are flagged in the event.
pub fn run(
    state: State,
    params: &ModelParams,
    controls: &StepControls,
    t_end: f64,
    output_every: Option<f64>,
    mut hook: impl FnMut(&StepEvent<'_>) -> Result<(), StepError>,
) -> Result<RunSummary, RunFailure> {
    let fail = |last_good: State, error, steps| Err(RunFailure { last_good, error, steps });
    let mut stepper = match TimeStepper::new(*controls) {
        Ok(s) => s,
        Err(e) => return fail(state, e, 0),
    };
    if let Some(every) = output_every {
        if !(every > 0.0) {
            return fail(state, StepError::BadControls("output interval must be > 0".into()), 0);
        }
    }
    let mut state = state;
    let mut steps = 0;
    let mut output_index = output_every.map(|e| (state.t / e).floor() as u64 + 1);
    while state.t < t_end {
        let limit = match (output_every, output_index) {
            (Some(e), Some(i)) => (e * i as f64).min(t_end),
            _ => t_end,
        };
        let (next, dt) = match stepper.advance(&state, params, limit) {
            Ok(r) => r,
            Err(e) => return fail(state, e, steps),
        };
        steps += 1;
        let at_output = output_every.is_some() && next.t == limit;
        if at_output {
            output_index = output_index.map(|i| i + 1);
        }
        let event = StepEvent { prev: &state, next: &next, dt, step: steps, at_output };
        if let Err(e) = hook(&event) {
            return fail(next, e, steps);
        }
        state = next;
    }
    Ok(RunSummary { state, steps, rejected: stepper.rejected_steps() })
}
