//! Motility functions `γ`, their derivatives, and the antiderivatives
//! `∫₁ˢ γ` and `∫₁ˢ ηγ(η) dη` used by the comparison and Lyapunov machinery.

use super::quadrature;
use super::KineticsError;
use statrs::function::gamma::{gamma as gamma_fn, gamma_ur};

/// Built-in motility families. All are positive on `(0, ∞)`; every family
/// except `Custom` is non-increasing with a vanishing limit at infinity.
#[derive(Debug, Clone, PartialEq)]
pub enum MotilityFamily {
    /// `s^(-k)`
    Power { k: f64 },
    /// `(a + s)^(-k)`
    ShiftedPower { a: f64, k: f64 },
    /// `exp(-χ s)`
    Exponential { chi: f64 },
    /// `exp(-b s^θ)` with `θ ∈ (0, 1)`
    StretchedExponential { beta_s: f64, theta: f64 },
    /// `(a1 + s)^(-k1) · log(a2 + s)^(-k2)` with `a2 >= 1`
    LogCorrected { a1: f64, k1: f64, a2: f64, k2: f64 },
    /// `(a1 + s)^(-k1) + (a2 + s)^(-k2)`
    SumOfPowers { a1: f64, k1: f64, a2: f64, k2: f64 },
    /// Monotone cubic interpolation of tabulated samples.
    Custom(TabulatedMotility),
}

/// `γ(s) = scale · g(arg_scale · s)` for a family `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotilitySpec {
    pub family: MotilityFamily,
    pub scale: f64,
    pub arg_scale: f64,
}

/// Values of `γ` and its companions at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotilityBundle {
    pub gamma: f64,
    pub gamma_prime: f64,
    /// `∫₁ˢ γ(η) dη`
    pub antiderivative: f64,
    /// `s γ(s)`
    pub gamma1: f64,
    /// `∫₁ˢ η γ(η) dη`
    pub gamma1_antiderivative: f64,
}

impl MotilityBundle {
    /// Derivative of `s γ(s)`, i.e. `γ(s) + s γ'(s)`.
    pub fn gamma1_prime(&self, s: f64) -> f64 {
        self.gamma + s * self.gamma_prime
    }
}

/// `∫_{y0}^{y} t^p dt` without cancellation near `p = -1`.
fn int_pow(y0: f64, y: f64, p: f64) -> f64 {
    let log_ratio = (y / y0).ln();
    if p == -1.0 {
        return log_ratio;
    }
    let e = p + 1.0;
    y0.powf(e) * (e * log_ratio).exp_m1() / e
}

const QUAD_REL_TOL: f64 = 1e-13;

impl MotilityFamily {
    pub fn validate(&self) -> Result<(), KineticsError> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(KineticsError::invalid(name, format!("{name} must be > 0")))
            }
        };
        let non_negative = |name: &'static str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(KineticsError::invalid(name, format!("{name} must be >= 0")))
            }
        };
        match *self {
            MotilityFamily::Power { k } => positive("k", k),
            MotilityFamily::ShiftedPower { a, k } => {
                non_negative("a", a)?;
                positive("k", k)
            }
            MotilityFamily::Exponential { chi } => positive("chi", chi),
            MotilityFamily::StretchedExponential { beta_s, theta } => {
                positive("beta_s", beta_s)?;
                if theta > 0.0 && theta < 1.0 {
                    Ok(())
                } else {
                    Err(KineticsError::invalid("theta", "theta must lie in (0, 1)".into()))
                }
            }
            MotilityFamily::LogCorrected { a1, k1, a2, k2 } => {
                non_negative("a1", a1)?;
                positive("k1", k1)?;
                positive("k2", k2)?;
                if a2 >= 1.0 && a2.is_finite() {
                    Ok(())
                } else {
                    Err(KineticsError::invalid("a2", "a2 must be >= 1 so that log(a2 + s) > 0".into()))
                }
            }
            MotilityFamily::SumOfPowers { a1, k1, a2, k2 } => {
                non_negative("a1", a1)?;
                non_negative("a2", a2)?;
                positive("k1", k1)?;
                positive("k2", k2)
            }
            MotilityFamily::Custom(_) => Ok(()),
        }
    }

    /// `(g(x), g'(x))`
    fn value(&self, x: f64) -> (f64, f64) {
        match *self {
            MotilityFamily::Power { k } => {
                let g = x.powf(-k);
                (g, -k * g / x)
            }
            MotilityFamily::ShiftedPower { a, k } => {
                let y = a + x;
                let g = y.powf(-k);
                (g, -k * g / y)
            }
            MotilityFamily::Exponential { chi } => {
                let g = (-chi * x).exp();
                (g, -chi * g)
            }
            MotilityFamily::StretchedExponential { beta_s, theta } => {
                let g = (-beta_s * x.powf(theta)).exp();
                (g, -beta_s * theta * x.powf(theta - 1.0) * g)
            }
            MotilityFamily::LogCorrected { a1, k1, a2, k2 } => {
                let l = (a2 + x).ln();
                let g = (a1 + x).powf(-k1) * l.powf(-k2);
                (g, g * (-k1 / (a1 + x) - k2 / ((a2 + x) * l)))
            }
            MotilityFamily::SumOfPowers { a1, k1, a2, k2 } => {
                let (y1, y2) = (a1 + x, a2 + x);
                let (g1, g2) = (y1.powf(-k1), y2.powf(-k2));
                (g1 + g2, -k1 * g1 / y1 - k2 * g2 / y2)
            }
            MotilityFamily::Custom(ref t) => t.value(x),
        }
    }

    /// `ln g(x)` without going through `g`, which underflows for the
    /// exponential families long before their logarithm does.
    fn ln_value(&self, x: f64) -> f64 {
        match *self {
            MotilityFamily::Exponential { chi } => -chi * x,
            MotilityFamily::StretchedExponential { beta_s, theta } => -beta_s * x.powf(theta),
            _ => self.value(x).0.ln(),
        }
    }

    /// `(∫₁ˣ g, ∫₁ˣ η g(η) dη)`
    fn antiderivatives(&self, x: f64) -> (f64, f64) {
        match *self {
            MotilityFamily::Power { k } => (int_pow(1.0, x, -k), int_pow(1.0, x, 1.0 - k)),
            MotilityFamily::ShiftedPower { a, k } => shifted_antiderivatives(a, k, x),
            MotilityFamily::Exponential { chi } => {
                let big = (-chi).exp() * -(-chi * (x - 1.0)).exp_m1() / chi;
                let c2 = 1.0 / (chi * chi);
                let moment = (-chi).exp() * (1.0 / chi + c2) - (-chi * x).exp() * (x / chi + c2);
                (big, moment)
            }
            MotilityFamily::StretchedExponential { beta_s, theta } => {
                // Substituting t = b η^θ turns both integrals into upper
                // incomplete gamma differences.
                let t = beta_s * x.powf(theta);
                let part = |order: f64| {
                    let coeff = gamma_fn(order) / (theta * beta_s.powf(order));
                    coeff * (gamma_ur(order, beta_s) - gamma_ur(order, t))
                };
                (part(1.0 / theta), part(2.0 / theta))
            }
            MotilityFamily::SumOfPowers { a1, k1, a2, k2 } => {
                let (g1, m1) = shifted_antiderivatives(a1, k1, x);
                let (g2, m2) = shifted_antiderivatives(a2, k2, x);
                (g1 + g2, m1 + m2)
            }
            MotilityFamily::LogCorrected { .. } => {
                // In t = ln η the integrands are smooth over many decades.
                let g = |t: f64| {
                    let e = t.exp();
                    e * self.value(e).0
                };
                let end = x.ln();
                (
                    quadrature::integrate(g, 0.0, end, QUAD_REL_TOL, 0.0),
                    quadrature::integrate(|t| t.exp() * g(t), 0.0, end, QUAD_REL_TOL, 0.0),
                )
            }
            MotilityFamily::Custom(ref t) => t.antiderivatives(x),
        }
    }
}

fn shifted_antiderivatives(a: f64, k: f64, x: f64) -> (f64, f64) {
    let (y0, y) = (a + 1.0, a + x);
    let big = int_pow(y0, y, -k);
    // η = (a + η) - a
    let moment = int_pow(y0, y, 1.0 - k) - a * big;
    (big, moment)
}

impl MotilitySpec {
    pub fn new(family: MotilityFamily) -> Self {
        Self { family, scale: 1.0, arg_scale: 1.0 }
    }

    pub fn power(k: f64) -> Self {
        Self::new(MotilityFamily::Power { k })
    }

    pub fn exponential(chi: f64) -> Self {
        Self::new(MotilityFamily::Exponential { chi })
    }

    pub fn with_scaling(mut self, scale: f64, arg_scale: f64) -> Self {
        self.scale *= scale;
        self.arg_scale *= arg_scale;
        self
    }

    pub fn validate(&self) -> Result<(), KineticsError> {
        self.family.validate()?;
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(KineticsError::invalid("scale", "scale must be > 0".into()));
        }
        if !(self.arg_scale > 0.0 && self.arg_scale.is_finite()) {
            return Err(KineticsError::invalid("arg_scale", "arg_scale must be > 0".into()));
        }
        Ok(())
    }

    /// `γ(s)`; cheap path used by the time stepper.
    #[inline]
    pub fn gamma(&self, s: f64) -> f64 {
        self.scale * self.family.value(self.arg_scale * s).0
    }

    /// `ln γ(s)`, finite wherever the family is positive even if `γ(s)`
    /// itself underflows.
    pub fn ln_gamma(&self, s: f64) -> f64 {
        self.scale.ln() + self.family.ln_value(self.arg_scale * s)
    }

    pub fn gamma_prime(&self, s: f64) -> f64 {
        self.scale * self.arg_scale * self.family.value(self.arg_scale * s).1
    }

    /// Full bundle at `s > 0`.
    pub fn bundle(&self, s: f64) -> Result<MotilityBundle, KineticsError> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(KineticsError::NonPositiveArgument(s));
        }
        let (c, a) = (self.scale, self.arg_scale);
        let (g, gp) = self.family.value(a * s);
        let (big, moment) = if a == 1.0 {
            self.family.antiderivatives(s)
        } else {
            // ∫₁ˢ g(aη) dη = (G(as) - G(a)) / a, and similarly for the moment.
            let (g_s, m_s) = self.family.antiderivatives(a * s);
            let (g_1, m_1) = self.family.antiderivatives(a);
            ((g_s - g_1) / a, (m_s - m_1) / (a * a))
        };
        Ok(MotilityBundle {
            gamma: c * g,
            gamma_prime: c * a * gp,
            antiderivative: c * big,
            gamma1: c * s * g,
            gamma1_antiderivative: c * moment,
        })
    }
}

/// Tabulated motility with Fritsch-Carlson monotone cubic interpolation.
/// Outside the table the end values are extended as constants.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedMotility {
    s: Vec<f64>,
    g: Vec<f64>,
    slopes: Vec<f64>,
}

impl TabulatedMotility {
    pub fn new(points: &[(f64, f64)]) -> Result<Self, KineticsError> {
        if points.len() < 2 {
            return Err(KineticsError::InvalidTable("need at least two points".into()));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(KineticsError::InvalidTable("abscissae must be strictly increasing".into()));
            }
        }
        if points.iter().any(|&(s, g)| !(s > 0.0 && s.is_finite() && g > 0.0 && g.is_finite())) {
            return Err(KineticsError::InvalidTable("abscissae and values must be positive and finite".into()));
        }
        let s: Vec<f64> = points.iter().map(|p| p.0).collect();
        let g: Vec<f64> = points.iter().map(|p| p.1).collect();
        let n = s.len();
        let secants: Vec<f64> = (0..n - 1).map(|i| (g[i + 1] - g[i]) / (s[i + 1] - s[i])).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            slopes[i] = if secants[i - 1] * secants[i] <= 0.0 {
                0.0
            } else {
                0.5 * (secants[i - 1] + secants[i])
            };
        }
        for i in 0..n - 1 {
            if secants[i] == 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            let alpha = slopes[i] / secants[i];
            let beta = slopes[i + 1] / secants[i];
            let r = alpha * alpha + beta * beta;
            if r > 9.0 {
                let t = 3.0 / r.sqrt();
                slopes[i] = t * alpha * secants[i];
                slopes[i + 1] = t * beta * secants[i];
            }
        }
        Ok(Self { s, g, slopes })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.s.iter().copied().zip(self.g.iter().copied())
    }

    fn value(&self, x: f64) -> (f64, f64) {
        let n = self.s.len();
        if x <= self.s[0] {
            return (self.g[0], 0.0);
        }
        if x >= self.s[n - 1] {
            return (self.g[n - 1], 0.0);
        }
        let i = self.s.partition_point(|&si| si <= x) - 1;
        let h = self.s[i + 1] - self.s[i];
        let t = (x - self.s[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let (y0, y1, m0, m1) = (self.g[i], self.g[i + 1], self.slopes[i] * h, self.slopes[i + 1] * h);
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let dv = (6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1;
        (v, dv / h)
    }

    fn antiderivatives(&self, x: f64) -> (f64, f64) {
        // Integrate knot-to-knot so every panel is a single cubic.
        let (lo, hi, sign) = if x >= 1.0 { (1.0, x, 1.0) } else { (x, 1.0, -1.0) };
        let mut breaks = vec![lo];
        breaks.extend(self.s.iter().copied().filter(|&k| k > lo && k < hi));
        breaks.push(hi);
        let (mut big, mut moment) = (0.0, 0.0);
        for w in breaks.windows(2) {
            big += quadrature::integrate(|s| self.value(s).0, w[0], w[1], QUAD_REL_TOL, 0.0);
            moment += quadrature::integrate(|s| s * self.value(s).0, w[0], w[1], QUAD_REL_TOL, 0.0);
        }
        (sign * big, sign * moment)
    }
}
