//! Motility and consumption catalogs, hypothesis checks, and the map from
//! physical constants to the dimensionless model.

pub mod assumptions;
pub mod consumption;
pub mod motility;
pub mod quadrature;

pub use assumptions::{check_assumptions, AssumptionQuery, AssumptionReport, Check, Verdict};
pub use consumption::{ConsumptionFamily, ConsumptionSpec, ConsumptionValue};
pub use motility::{MotilityBundle, MotilityFamily, MotilitySpec, TabulatedMotility};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KineticsError {
    #[error("{message}")]
    InvalidParameter { name: &'static str, message: String },
    #[error("argument must be positive and finite, got {0}")]
    NonPositiveArgument(f64),
    #[error("empty sampling range [{s_min}, {s_max}]")]
    EmptyRange { s_min: f64, s_max: f64 },
    #[error("at least 100 samples required, got {0}")]
    TooFewSamples(usize),
    #[error("invalid motility table: {0}")]
    InvalidTable(String),
}

impl KineticsError {
    pub(crate) fn invalid(name: &'static str, message: String) -> Self {
        KineticsError::InvalidParameter { name, message }
    }
}

/// Parameters of the dimensionless system.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub tau: f64,
    pub beta: f64,
    pub motility: MotilitySpec,
    pub consumption: ConsumptionSpec,
}

impl ModelParams {
    pub fn new(tau: f64, beta: f64, motility: MotilitySpec, consumption: ConsumptionSpec) -> Result<Self, KineticsError> {
        let p = Self { tau, beta, motility, consumption };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), KineticsError> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(KineticsError::invalid("tau", "tau must be > 0".into()));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(KineticsError::invalid("beta", "beta must be > 0".into()));
        }
        self.motility.validate()?;
        self.consumption.validate()
    }
}

/// Dimensional constants of the original model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Signal diffusivity.
    pub d_v: f64,
    /// Nutrient diffusivity.
    pub d_n: f64,
    /// Signal production rate, which sets the signal scale.
    pub alpha: f64,
    /// Signal degradation rate.
    pub beta: f64,
    /// Maximal consumption rate.
    pub k_s: f64,
    /// Half-saturation constant of the Hill consumption law.
    pub k_n: f64,
    /// Yield of cells per consumed nutrient; zero switches consumption off.
    pub theta: f64,
}

/// Maps dimensional constants to the dimensionless model: `τ = D_n/D_v`,
/// `γ̄(s) = γ(αs)/(τ D_v)` and `f̄(s) = θ f(k_s s)/τ` with a Hill law `f`.
pub fn rescale_from_physical(p: &PhysicalParams, gamma: &MotilitySpec) -> Result<ModelParams, KineticsError> {
    let fields = [("d_v", p.d_v), ("d_n", p.d_n), ("alpha", p.alpha), ("beta", p.beta), ("k_s", p.k_s), ("k_n", p.k_n)];
    for (name, v) in fields {
        if !(v > 0.0 && v.is_finite()) {
            return Err(KineticsError::invalid(name, format!("{name} must be > 0")));
        }
    }
    if !(p.theta >= 0.0 && p.theta.is_finite()) {
        return Err(KineticsError::invalid("theta", "theta must be >= 0".into()));
    }
    let tau = p.d_n / p.d_v;
    let motility = gamma.clone().with_scaling(1.0 / (tau * p.d_v), p.alpha);
    let consumption = if p.theta == 0.0 {
        ConsumptionSpec::zero()
    } else {
        ConsumptionSpec::new(ConsumptionFamily::Hill2 { k_n: p.k_n }).with_scaling(p.theta / tau, p.k_s)
    };
    ModelParams::new(tau, p.beta, motility, consumption)
}
