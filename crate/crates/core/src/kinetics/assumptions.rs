//! Hypothesis checks for motility functions.
//!
//! Limits at infinity cannot be certified by sampling, so every check carries
//! two answers: the closed-form truth for built-in families (when known) and a
//! sampled verdict over `[s_min, s_max]` with a witness value.

use super::motility::{MotilityFamily, MotilitySpec};
use super::KineticsError;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }

    fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fails, _) | (_, Verdict::Fails) => Verdict::Fails,
            (Verdict::Holds, Verdict::Holds) => Verdict::Holds,
            _ => Verdict::Inconclusive,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    /// Closed-form answer for built-in families.
    pub analytic: Option<bool>,
    pub sampled: Verdict,
    pub witness: f64,
}

impl Check {
    /// The analytic answer when available, otherwise the sampled one.
    pub fn verdict(&self) -> Verdict {
        self.analytic.map(Verdict::from_bool).unwrap_or(self.sampled)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionQuery {
    /// Exponent in `liminf s^k γ(s) > 0`.
    pub k: f64,
    /// Exponent in `limsup s^l γ(s) < ∞`.
    pub l: f64,
    /// Rate in `liminf e^{χ s} γ(s) > 0`.
    pub chi: f64,
    pub b0: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub samples: usize,
    /// Space dimension for the high-dimensional exponent test.
    pub space_dim: usize,
}

impl Default for AssumptionQuery {
    fn default() -> Self {
        Self { k: 1.0, l: 0.0, chi: 1.0, b0: 1.0, s_min: 1e-3, s_max: 1e3, samples: 1000, space_dim: 2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub query: AssumptionQuery,
    pub min_gamma: f64,
    /// `γ > 0` and `γ' <= 0`; witness is `max γ'`.
    pub positivity_monotone: Check,
    /// `liminf s^k γ > 0` and `limsup s^l γ < ∞`; witness is `min s^k γ`.
    pub algebraic_decay: Check,
    pub max_s_l_gamma: f64,
    /// `liminf e^{χ s} γ > 0`; witness is `min e^{χ s} γ`.
    pub exponential_decay: Check,
    /// `sγ(s) + (b0 - 1)Γ(s)` bounded; witness is its max for the queried `b0`.
    pub growth_control: Check,
    /// A `b0` known to work for the family, when one is.
    pub family_b0: Option<f64>,
    /// Sampled max of `sγ(s) + (b0 - 1)Γ(s)` at `family_b0`.
    pub family_b0_witness: Option<f64>,
    /// `sγ' + γ >= 0`; witness is its minimum.
    pub gamma1_monotone: Check,
    /// `k < N/(N-2)` and `k - l < 2/(N-2)`, only meaningful for `N >= 3`.
    pub high_dim_regime: Option<bool>,
}

/// Asymptotic facts for families with closed-form tails.
struct Truth {
    algebraic_lower: Option<bool>,
    algebraic_upper: Option<bool>,
    exponential: Option<bool>,
    gamma1_monotone: Option<bool>,
    growth_control: Option<bool>,
    family_b0: Option<f64>,
}

/// `b0` from the two-sided power tail `B s^{-l} <= γ <= A s^{-l}`.
fn power_tail_b0(l: f64, a_l: f64, b_l: f64) -> Option<f64> {
    if l >= 1.0 {
        Some(1.0)
    } else if (1.0 - l) * a_l < b_l {
        Some((b_l - (1.0 - l) * a_l) / (2.0 * b_l))
    } else {
        None
    }
}

fn truth_table(spec: &MotilitySpec, q: &AssumptionQuery) -> Truth {
    let (c, alpha) = (spec.scale, spec.arg_scale);
    let power_like = |k0: f64, coeff: f64, g1: Option<bool>| Truth {
        algebraic_lower: Some(q.k >= k0),
        algebraic_upper: Some(q.l <= k0),
        exponential: Some(true),
        gamma1_monotone: g1,
        growth_control: Some(true),
        family_b0: power_tail_b0(k0, coeff, coeff),
    };
    match spec.family {
        MotilityFamily::Power { k } => power_like(k, c * alpha.powf(-k), Some(k <= 1.0)),
        MotilityFamily::ShiftedPower { k, .. } => power_like(k, c * alpha.powf(-k), Some(k <= 1.0)),
        MotilityFamily::SumOfPowers { k1, k2, .. } => {
            let kmin = k1.min(k2);
            let weight = if k1 == k2 { 2.0 } else { 1.0 };
            let g1 = if k1.max(k2) <= 1.0 {
                Some(true)
            } else if kmin > 1.0 {
                Some(false)
            } else {
                None
            };
            power_like(kmin, weight * c * alpha.powf(-kmin), g1)
        }
        MotilityFamily::Exponential { chi } => Truth {
            algebraic_lower: Some(false),
            algebraic_upper: Some(true),
            exponential: Some(q.chi >= chi * alpha),
            gamma1_monotone: Some(false),
            growth_control: Some(true),
            family_b0: Some(1.0),
        },
        MotilityFamily::StretchedExponential { .. } => Truth {
            algebraic_lower: Some(false),
            algebraic_upper: Some(true),
            exponential: Some(true),
            gamma1_monotone: Some(false),
            growth_control: Some(true),
            family_b0: Some(1.0),
        },
        MotilityFamily::LogCorrected { k1, .. } => Truth {
            // s^k γ ~ s^{k-k1} / log^{k2} s
            algebraic_lower: Some(q.k > k1),
            algebraic_upper: Some(q.l <= k1),
            exponential: Some(true),
            gamma1_monotone: None,
            growth_control: Some(true),
            // sγ' + b0 γ <= 0 eventually for any b0 < k1.
            family_b0: Some(if k1 >= 1.0 { 1.0 } else { 0.5 * k1 }),
        },
        MotilityFamily::Custom(_) => Truth {
            algebraic_lower: None,
            algebraic_upper: None,
            exponential: None,
            gamma1_monotone: None,
            growth_control: None,
            family_b0: None,
        },
    }
}

/// Sampled tail trend of a log-valued sequence: change over the last quarter.
fn tail_change(log_values: &[f64]) -> f64 {
    let n = log_values.len();
    log_values[n - 1] - log_values[(3 * n) / 4]
}

const FLAT: f64 = 1e-3;
const STEEP: f64 = std::f64::consts::LN_2;

fn lower_bound_verdict(log_values: &[f64]) -> Verdict {
    let d = tail_change(log_values);
    if d >= -FLAT {
        Verdict::Holds
    } else if d < -STEEP {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    }
}

fn upper_bound_verdict(log_values: &[f64]) -> Verdict {
    let d = tail_change(log_values);
    if d <= FLAT {
        Verdict::Holds
    } else if d > STEEP {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    }
}

fn bounded_verdict(values: &[f64]) -> Verdict {
    let n = values.len();
    let early = values[..(3 * n) / 4].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let late = values[(3 * n) / 4..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = early.abs().max(1.0);
    if late <= early + FLAT * scale {
        Verdict::Holds
    } else if late > early + scale {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    }
}

pub fn check_assumptions(spec: &MotilitySpec, q: &AssumptionQuery) -> Result<AssumptionReport, KineticsError> {
    spec.validate()?;
    if !(q.s_min > 0.0 && q.s_max > q.s_min && q.s_max.is_finite()) {
        return Err(KineticsError::EmptyRange { s_min: q.s_min, s_max: q.s_max });
    }
    if q.samples < 100 {
        return Err(KineticsError::TooFewSamples(q.samples));
    }
    if !(q.b0 > 0.0 && q.b0 <= 1.0) {
        return Err(KineticsError::invalid("b0", "b0 must lie in (0, 1]".into()));
    }
    if !(q.k >= 0.0 && q.l >= 0.0 && q.chi > 0.0) {
        return Err(KineticsError::invalid("k", "k and l must be >= 0 and chi > 0".into()));
    }

    let ratio = (q.s_max / q.s_min).ln();
    let grid: Vec<f64> = (0..q.samples)
        .map(|i| q.s_min * (ratio * i as f64 / (q.samples - 1) as f64).exp())
        .collect();
    let bundles = grid.iter().map(|&s| spec.bundle(s)).collect::<Result<Vec<_>, _>>()?;

    let log_gamma: Vec<f64> = grid.iter().map(|&s| spec.ln_gamma(s)).collect();
    let min_gamma = bundles.iter().map(|b| b.gamma).fold(f64::INFINITY, f64::min);
    let max_gamma_prime = bundles.iter().map(|b| b.gamma_prime).fold(f64::NEG_INFINITY, f64::max);
    let positivity_monotone = Check {
        analytic: match spec.family {
            MotilityFamily::Custom(_) => None,
            _ => Some(true),
        },
        sampled: Verdict::from_bool(log_gamma.iter().all(|l| l.is_finite()) && max_gamma_prime <= 0.0),
        witness: max_gamma_prime,
    };

    let truth = truth_table(spec, q);

    let log_lower: Vec<f64> = grid.iter().zip(&log_gamma).map(|(s, lg)| q.k * s.ln() + lg).collect();
    let log_upper: Vec<f64> = grid.iter().zip(&log_gamma).map(|(s, lg)| q.l * s.ln() + lg).collect();
    let ordered = q.k >= q.l;
    let algebraic_decay = Check {
        analytic: match (truth.algebraic_lower, truth.algebraic_upper) {
            (Some(a), Some(b)) => Some(ordered && a && b),
            _ => None,
        },
        sampled: lower_bound_verdict(&log_lower)
            .and(upper_bound_verdict(&log_upper))
            .and(if ordered { Verdict::Holds } else { Verdict::Fails }),
        witness: log_lower.iter().cloned().fold(f64::INFINITY, f64::min).exp(),
    };
    let max_s_l_gamma = log_upper.iter().cloned().fold(f64::NEG_INFINITY, f64::max).exp();

    let log_exp: Vec<f64> = grid.iter().zip(&log_gamma).map(|(s, lg)| q.chi * s + lg).collect();
    let exponential_decay = Check {
        analytic: truth.exponential,
        sampled: lower_bound_verdict(&log_exp),
        witness: log_exp.iter().cloned().fold(f64::INFINITY, f64::min).exp(),
    };

    let growth = |b0: f64| -> Vec<f64> {
        bundles.iter().map(|b| b.gamma1 + (b0 - 1.0) * b.antiderivative).collect()
    };
    let user_growth = growth(q.b0);
    let mut sampled_growth = bounded_verdict(&user_growth);
    let family_b0_witness = truth.family_b0.map(|b0| {
        let g = growth(b0);
        if sampled_growth != Verdict::Holds {
            sampled_growth = match bounded_verdict(&g) {
                Verdict::Holds => Verdict::Holds,
                _ => sampled_growth,
            };
        }
        g.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    });
    let growth_control = Check {
        analytic: truth.growth_control,
        sampled: sampled_growth,
        witness: user_growth.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    };

    let min_g1p = grid
        .iter()
        .zip(&bundles)
        .map(|(&s, b)| b.gamma1_prime(s))
        .fold(f64::INFINITY, f64::min);
    let sampled_g1 = grid
        .iter()
        .zip(&bundles)
        .all(|(&s, b)| b.gamma1_prime(s) >= -1e-12 * b.gamma.abs());
    let gamma1_monotone = Check {
        analytic: truth.gamma1_monotone,
        sampled: Verdict::from_bool(sampled_g1),
        witness: min_g1p,
    };

    let high_dim_regime = (q.space_dim >= 3).then(|| {
        let n = q.space_dim as f64;
        q.k < n / (n - 2.0) && q.k - q.l < 2.0 / (n - 2.0)
    });

    Ok(AssumptionReport {
        query: *q,
        min_gamma,
        positivity_monotone,
        algebraic_decay,
        max_s_l_gamma,
        exponential_decay,
        growth_control,
        family_b0: truth.family_b0,
        family_b0_witness,
        gamma1_monotone,
        high_dim_regime,
    })
}

fn source(c: &Check) -> &'static str {
    if c.analytic.is_some() {
        "closed form"
    } else {
        "sampled"
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = &self.query;
        writeln!(
            f,
            "range [{:e}, {:e}], {} samples; k = {}, l = {}, chi = {}, b0 = {}",
            q.s_min, q.s_max, q.samples, q.k, q.l, q.chi, q.b0
        )?;
        let row = |f: &mut fmt::Formatter<'_>, name: &str, c: &Check, what: &str| {
            writeln!(
                f,
                "{name:<28} {:<13} ({}; sampled {}) {what} = {:e}",
                c.verdict().to_string(),
                source(c),
                c.sampled,
                c.witness
            )
        };
        row(f, "gamma > 0, gamma' <= 0", &self.positivity_monotone, "max gamma'")?;
        writeln!(f, "{:<28} min gamma = {:e}", "", self.min_gamma)?;
        row(f, "algebraic decay (k, l)", &self.algebraic_decay, "min s^k gamma")?;
        writeln!(f, "{:<28} max s^l gamma = {:e}", "", self.max_s_l_gamma)?;
        row(f, "exponential decay (chi)", &self.exponential_decay, "min e^(chi s) gamma")?;
        row(f, "growth control (b0)", &self.growth_control, "max s gamma + (b0-1) Gamma")?;
        if let (Some(b0), Some(w)) = (self.family_b0, self.family_b0_witness) {
            writeln!(f, "{:<28} family b0 = {b0}, sampled max = {w:e} (empirical bound, not a sharp constant)", "")?;
        }
        row(f, "s gamma nondecreasing", &self.gamma1_monotone, "min s gamma' + gamma")?;
        match self.high_dim_regime {
            Some(ok) => writeln!(
                f,
                "{:<28} {} (N = {})",
                "high-dimensional exponents",
                if ok { "inside" } else { "outside" },
                q.space_dim
            ),
            None => writeln!(f, "{:<28} not applicable (N = {})", "high-dimensional exponents", q.space_dim),
        }
    }
}
