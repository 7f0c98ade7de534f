//! Auxiliary elliptic fields, the key identity residual, comparison ratios,
//! the Lyapunov functional with its dissipation terms, distances to the
//! homogeneous state, and exponential rate fits.

use crate::elliptic::{helmholtz_solve, poisson_meanzero_solve, EllipticSolveOptions, SolveError};
use crate::grid::{gradient_norm_squared, integrate, mean, weighted_gradient_norm_squared, Field};
use crate::kinetics::{KineticsError, ModelParams, MotilitySpec};
use crate::solver::{State, StepEvent};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for diagnostic solves; tighter than the default so pointwise
/// comparisons between auxiliary fields are meaningful near 1e-10.
pub const DIAGNOSTIC_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Kinetics(#[from] KineticsError),
}

/// `w = 𝒜⁻¹u`, `S = 𝒜⁻¹(u + n)`, `φ = 𝒜⁻¹(uγ(v))`, `ψ = 𝒜⁻¹(u f(n))` with
/// `𝒜 = -Δ + β`, and the mean-zero potential `U` with `-ΔU = u - ⟨u⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryFields {
    pub w: Field,
    pub s: Field,
    pub phi: Field,
    pub psi: Field,
    pub potential: Field,
}

pub fn auxiliary_fields(state: &State, params: &ModelParams) -> Result<AuxiliaryFields, SolveError> {
    auxiliary_fields_with(state, params, &EllipticSolveOptions::with_tolerance(DIAGNOSTIC_TOLERANCE))
}

pub fn auxiliary_fields_with(
    state: &State,
    params: &ModelParams,
    opts: &EllipticSolveOptions,
) -> Result<AuxiliaryFields, SolveError> {
    let beta = params.beta;
    let (u, v, n) = (&state.u, &state.v, &state.n);
    let w = helmholtz_solve(u, beta, opts)?;
    let s = helmholtz_solve(&u.zip_map(n, |a, b| a + b), beta, opts)?;
    let phi = helmholtz_solve(&u.zip_map(v, |a, b| a * params.motility.gamma(b)), beta, opts)?;
    let psi = helmholtz_solve(&u.zip_map(n, |a, b| a * params.consumption.eval(b).f), beta, opts)?;
    // Centering twice removes the rounding left by the first pass, so the
    // compatibility check sees a mean at the level of the fluctuation.
    let centered = u.add_scalar(-mean(u));
    let centered = centered.add_scalar(-mean(&centered));
    let potential = poisson_meanzero_solve(&centered, opts)?;
    Ok(AuxiliaryFields { w, s, phi, psi, potential })
}

/// `‖(w_next - w_prev)/dt + uγ(v) - βφ - ψ‖∞` with `u`, `v`, `φ`, `ψ` taken
/// at the new time level. It vanishes at equilibria and is `O(dt)` along
/// smooth solutions.
pub fn key_identity_residual(
    next: &State,
    aux_prev: &AuxiliaryFields,
    aux_next: &AuxiliaryFields,
    params: &ModelParams,
    dt: f64,
) -> f64 {
    let (u, v) = (next.u.values(), next.v.values());
    let (wp, wn) = (aux_prev.w.values(), aux_next.w.values());
    let (phi, psi) = (aux_next.phi.values(), aux_next.psi.values());
    (0..u.len())
        .map(|k| {
            ((wn[k] - wp[k]) / dt + u[k] * params.motility.gamma(v[k]) - params.beta * phi[k] - psi[k]).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRatios {
    /// `max v/w`
    pub ratio_upper: f64,
    /// `min v/S`
    pub ratio_lower: f64,
}

pub fn comparison_ratios(state: &State, aux: &AuxiliaryFields) -> ComparisonRatios {
    let v = state.v.values();
    let upper = v.iter().zip(aux.w.values()).map(|(v, w)| v / w).fold(f64::NEG_INFINITY, f64::max);
    let lower = v.iter().zip(aux.s.values()).map(|(v, s)| v / s).fold(f64::INFINITY, f64::min);
    ComparisonRatios { ratio_upper: upper, ratio_lower: lower }
}

/// Largest violation of `w <= S <= w + n_sup/β` over the cells (0 if none).
pub fn sandwich_defect(aux: &AuxiliaryFields, n_sup: f64, beta: f64) -> f64 {
    aux.w
        .values()
        .iter()
        .zip(aux.s.values())
        .map(|(&w, &s)| (w - s).max(s - w - n_sup / beta).max(0.0))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceMetrics {
    pub linf_u: f64,
    pub linf_v: f64,
    pub linf_n: f64,
}

impl ConvergenceMetrics {
    pub fn sum(&self) -> f64 {
        self.linf_u + self.linf_v + self.linf_n
    }
}

/// `‖u - m‖∞`, `‖v - m‖∞`, `‖n‖∞`.
pub fn convergence_metrics(state: &State, m: f64) -> ConvergenceMetrics {
    let dist = |f: &Field, c: f64| f.values().iter().fold(0.0f64, |a, x| a.max((x - c).abs()));
    ConvergenceMetrics { linf_u: dist(&state.u, m), linf_v: dist(&state.v, m), linf_n: dist(&state.n, 0.0) }
}

/// The four dissipation terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dissipation {
    /// `∫ [2γ₁'(v) - ⟨u⟩γ'(v)] |∇v|²`, with the coefficient taken at the
    /// average of the two cell values on each face.
    pub d1: f64,
    /// `∫ (v - ⟨u⟩)(γ₁(v) - γ₁(⟨u⟩))`
    pub d2: f64,
    /// `∫ (v - u)² γ(v)`
    pub d3: f64,
    /// `‖u f(n)‖₁`
    pub d4: f64,
}

impl Dissipation {
    pub fn total(&self) -> f64 {
        self.d1 + self.d2 + self.d3 + self.d4
    }
}

pub fn dissipation(state: &State, params: &ModelParams) -> Dissipation {
    let gamma = &params.motility;
    let u_mean = mean(&state.u);
    let gamma1 = |s: f64| s * gamma.gamma(s);
    let d1 = weighted_gradient_norm_squared(&state.v, |a, b| {
        let s = 0.5 * (a + b);
        let gp = gamma.gamma_prime(s);
        2.0 * (gamma.gamma(s) + s * gp) - u_mean * gp
    });
    let g1_mean = gamma1(u_mean);
    let vol = state.grid().cell_volume();
    let (u, v, n) = (state.u.values(), state.v.values(), state.n.values());
    let (mut d2, mut d3, mut d4) = (0.0, 0.0, 0.0);
    for k in 0..u.len() {
        d2 += (v[k] - u_mean) * (gamma1(v[k]) - g1_mean);
        d3 += (v[k] - u[k]).powi(2) * gamma.gamma(v[k]);
        d4 += u[k] * params.consumption.eval(n[k]).f;
    }
    Dissipation { d1, d2: d2 * vol, d3: d3 * vol, d4: d4 * vol }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovReport {
    pub value: f64,
    pub dissipation: Dissipation,
    pub kstar: f64,
}

/// `L = ½‖∇U‖² + 2∫Γ₁(v) - ⟨u⟩∫Γ(v) - γ₁(⟨u⟩)‖v‖₁ + K*‖n‖₁
///      + |Ω|(γ₁(⟨u⟩)⟨u⟩ + ⟨u⟩Γ(⟨u⟩) - 2Γ₁(⟨u⟩))`
pub fn lyapunov(
    state: &State,
    potential: &Field,
    params: &ModelParams,
    kstar: f64,
) -> Result<LyapunovReport, KineticsError> {
    let gamma = &params.motility;
    let grid = state.grid();
    let u_mean = mean(&state.u);
    let at_mean = gamma.bundle(u_mean)?;
    let (mut big1, mut big) = (0.0, 0.0);
    for &v in state.v.values() {
        let b = gamma.bundle(v)?;
        big1 += b.gamma1_antiderivative;
        big += b.antiderivative;
    }
    let vol = grid.cell_volume();
    let (big1, big) = (big1 * vol, big * vol);
    let v_l1 = integrate(&state.v.map(f64::abs));
    let n_l1 = integrate(&state.n.map(f64::abs));
    let constant = grid.measure()
        * (at_mean.gamma1 * u_mean + u_mean * at_mean.antiderivative - 2.0 * at_mean.gamma1_antiderivative);
    let value = 0.5 * gradient_norm_squared(potential) + 2.0 * big1 - u_mean * big - at_mean.gamma1 * v_l1
        + kstar * n_l1
        + constant;
    Ok(LyapunovReport { value, dissipation: dissipation(state, params), kstar })
}

const KSTAR_SAMPLES: usize = 2000;

/// Running maxima behind `K* = 1 + U* + u* sup_{[a_*, a^*]} γ₁' + 2Γ(a^*)`
/// with `a_* = min{1, v_*, ⟨u_in⟩}`, `a^* = max{u*, v*}`, `u*, v* >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct KstarTracker {
    u_star: f64,
    v_star: f64,
    v_low: f64,
    potential_star: f64,
    u_in_mean: f64,
}

impl KstarTracker {
    pub fn new(initial: &State) -> Self {
        Self {
            u_star: initial.u.max().max(1.0),
            v_star: initial.v.max().max(1.0),
            v_low: initial.v.min(),
            potential_star: 0.0,
            u_in_mean: mean(&initial.u),
        }
    }

    pub fn observe_state(&mut self, state: &State) {
        self.u_star = self.u_star.max(state.u.max());
        self.v_star = self.v_star.max(state.v.max());
        self.v_low = self.v_low.min(state.v.min());
    }

    pub fn observe_potential(&mut self, potential: &Field) {
        let sup = potential.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        self.potential_star = self.potential_star.max(sup);
    }

    pub fn bounds(&self) -> (f64, f64) {
        (1.0f64.min(self.v_low).min(self.u_in_mean), self.u_star.max(self.v_star))
    }

    pub fn value(&self, gamma: &MotilitySpec) -> Result<f64, KineticsError> {
        let (lo, hi) = self.bounds();
        let ratio = (hi / lo).ln();
        let sup = (0..KSTAR_SAMPLES)
            .map(|i| {
                let s = lo * (ratio * i as f64 / (KSTAR_SAMPLES - 1) as f64).exp();
                gamma.gamma(s) + s * gamma.gamma_prime(s)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let big = gamma.bundle(hi)?.antiderivative;
        Ok(1.0 + self.potential_star + self.u_star * sup + 2.0 * big)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least 10 points in the fit window, got {0}")]
    TooFewPoints(usize),
    #[error("non-positive value {value} at t = {t} in the fit window")]
    NonPositive { t: f64, value: f64 },
    #[error("window fraction must lie in (0, 1], got {0}")]
    BadWindow(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub delta: f64,
    pub c: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(t, ln value)` over the points with
/// `t >= t_last - window·(t_last - t_first)`; `delta` is minus the slope.
pub fn fit_exponential_rate(series: &[(f64, f64)], window: f64) -> Result<RateFit, FitError> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(FitError::BadWindow(window));
    }
    if series.len() < 10 {
        return Err(FitError::TooFewPoints(series.len()));
    }
    let (t0, t1) = (series[0].0, series[series.len() - 1].0);
    let cut = t1 - window * (t1 - t0);
    let pts: Vec<(f64, f64)> = series.iter().copied().filter(|p| p.0 >= cut).collect();
    if pts.len() < 10 {
        return Err(FitError::TooFewPoints(pts.len()));
    }
    if let Some(&(t, value)) = pts.iter().find(|p| !(p.1 > 0.0)) {
        return Err(FitError::NonPositive { t, value });
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, v) in &pts {
        let (dt, dy) = (t - tm, v.ln() - ym);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    let slope = if stt > 0.0 { sty / stt } else { 0.0 };
    let intercept = ym - slope * tm;
    let r_squared = if syy > 0.0 { (sty * sty) / (stt * syy) } else { 1.0 };
    Ok(RateFit { delta: -slope, c: intercept.exp(), r_squared })
}

/// One row of the diagnostics table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub step: usize,
    pub accepted_dt: f64,
    pub mass_total: f64,
    pub mass_u: f64,
    pub mass_n: f64,
    pub min_v: f64,
    pub max_u: f64,
    pub lyapunov: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    pub kstar: f64,
    /// Left Riemann sum of `D₁ + D₂ + D₃ + D₄` over every accepted step.
    pub dissipation_integral: f64,
    pub linf_u_minus_m: f64,
    pub linf_v_minus_m: f64,
    pub linf_n: f64,
    pub ratio_upper: f64,
    pub ratio_lower: f64,
    pub keyid_residual: f64,
    pub sandwich_defect: f64,
    pub max_s: f64,
}

impl DiagnosticsRecord {
    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.accepted_dt,
            self.mass_total,
            self.mass_u,
            self.mass_n,
            self.min_v,
            self.max_u,
            self.lyapunov,
            self.d1,
            self.d2,
            self.d3,
            self.d4,
            self.kstar,
            self.dissipation_integral,
            self.linf_u_minus_m,
            self.linf_v_minus_m,
            self.linf_n,
            self.ratio_upper,
            self.ratio_lower,
            self.keyid_residual,
            self.sandwich_defect,
            self.max_s,
        ]
        .iter()
        .all(|x| x.is_finite())
    }
}

/// Collects diagnostics along a run: dissipation and running maxima at every
/// accepted step, full records at output steps.
#[derive(Debug, Clone)]
pub struct Monitor {
    params: ModelParams,
    opts: EllipticSolveOptions,
    m: f64,
    n_in_sup: f64,
    kstar: KstarTracker,
    last_dissipation: f64,
    dissipation_integral: f64,
    records: Vec<DiagnosticsRecord>,
}

impl Monitor {
    /// Starts a monitor and records the initial state (key identity residual 0).
    pub fn new(initial: &State, params: &ModelParams) -> Result<Self, DiagnosticsError> {
        let mut monitor = Self {
            params: params.clone(),
            opts: EllipticSolveOptions::with_tolerance(DIAGNOSTIC_TOLERANCE),
            m: initial.total_mass() / initial.grid().measure(),
            n_in_sup: initial.n.values().iter().fold(0.0f64, |m, x| m.max(x.abs())),
            kstar: KstarTracker::new(initial),
            last_dissipation: 0.0,
            dissipation_integral: 0.0,
            records: Vec::new(),
        };
        let aux = auxiliary_fields_with(initial, params, &monitor.opts)?;
        let rec = monitor.record(initial, &aux, 0.0, 0, 0.0)?;
        monitor.last_dissipation = rec.d1 + rec.d2 + rec.d3 + rec.d4;
        monitor.records.push(rec);
        Ok(monitor)
    }

    /// Mean of `u + n` at the start of the run.
    pub fn homogeneous_level(&self) -> f64 {
        self.m
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<DiagnosticsRecord> {
        self.records
    }

    /// Processes one accepted step; returns the new record when one is taken.
    pub fn observe(&mut self, ev: &StepEvent<'_>, take_record: bool) -> Result<Option<DiagnosticsRecord>, DiagnosticsError> {
        self.dissipation_integral += self.last_dissipation * ev.dt;
        self.kstar.observe_state(ev.next);
        if !take_record {
            self.last_dissipation = dissipation(ev.next, &self.params).total();
            return Ok(None);
        }
        let aux_prev = auxiliary_fields_with(ev.prev, &self.params, &self.opts)?;
        let aux = auxiliary_fields_with(ev.next, &self.params, &self.opts)?;
        let keyid = key_identity_residual(ev.next, &aux_prev, &aux, &self.params, ev.dt);
        let rec = self.record(ev.next, &aux, keyid, ev.step, ev.dt)?;
        self.last_dissipation = rec.d1 + rec.d2 + rec.d3 + rec.d4;
        self.records.push(rec);
        Ok(Some(rec))
    }

    fn record(
        &mut self,
        state: &State,
        aux: &AuxiliaryFields,
        keyid: f64,
        step: usize,
        dt: f64,
    ) -> Result<DiagnosticsRecord, DiagnosticsError> {
        self.kstar.observe_potential(&aux.potential);
        let kstar = self.kstar.value(&self.params.motility)?;
        let ly = lyapunov(state, &aux.potential, &self.params, kstar)?;
        let ratios = comparison_ratios(state, aux);
        let metrics = convergence_metrics(state, self.m);
        let (mass_u, mass_n) = (integrate(&state.u), integrate(&state.n));
        Ok(DiagnosticsRecord {
            t: state.t,
            step,
            accepted_dt: dt,
            mass_total: mass_u + mass_n,
            mass_u,
            mass_n,
            min_v: state.v.min(),
            max_u: state.u.max(),
            lyapunov: ly.value,
            d1: ly.dissipation.d1,
            d2: ly.dissipation.d2,
            d3: ly.dissipation.d3,
            d4: ly.dissipation.d4,
            kstar,
            dissipation_integral: self.dissipation_integral,
            linf_u_minus_m: metrics.linf_u,
            linf_v_minus_m: metrics.linf_v,
            linf_n: metrics.linf_n,
            ratio_upper: ratios.ratio_upper,
            ratio_lower: ratios.ratio_lower,
            keyid_residual: keyid,
            sandwich_defect: sandwich_defect(aux, self.n_in_sup, self.params.beta),
            max_s: aux.s.max(),
        })
    }
}

/// Slack allowed between consecutive values of the discrete Lyapunov
/// functional, `c (dt + h²)(1 + |L|)`.
pub const LYAPUNOV_SLACK: f64 = 1.0;

/// Counts record pairs where `L` increases by more than the discretization
/// slack, after removing the change caused by `K*` growing (which multiplies
/// `‖n‖₁`).
pub fn lyapunov_violations(records: &[DiagnosticsRecord], h_squared: f64) -> usize {
    records
        .windows(2)
        .filter(|w| {
            let (a, b) = (&w[0], &w[1]);
            let baseline = a.lyapunov + (b.kstar - a.kstar) * a.mass_n;
            let slack = LYAPUNOV_SLACK * (b.accepted_dt + h_squared) * (1.0 + a.lyapunov.abs());
            b.lyapunov > baseline + slack
        })
        .count()
}
