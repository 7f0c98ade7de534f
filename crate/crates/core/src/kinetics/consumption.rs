//! Nutrient consumption rates `f(n)`.

use super::KineticsError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConsumptionFamily {
    Zero,
    /// `s² / (s² + K)`
    Hill2 { k_n: f64 },
    /// `s / (K + s)`
    Monod { k: f64 },
    /// `c s`
    Linear { c: f64 },
}

/// `f(s) = scale · h(arg_scale · s)` for a family `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsumptionSpec {
    pub family: ConsumptionFamily,
    pub scale: f64,
    pub arg_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsumptionValue {
    pub f: f64,
    /// `f(s)/s`, with the analytic limit at `s = 0`.
    pub f_over_s: f64,
}

impl ConsumptionSpec {
    pub fn new(family: ConsumptionFamily) -> Self {
        Self { family, scale: 1.0, arg_scale: 1.0 }
    }

    pub fn zero() -> Self {
        Self::new(ConsumptionFamily::Zero)
    }

    pub fn with_scaling(mut self, scale: f64, arg_scale: f64) -> Self {
        self.scale *= scale;
        self.arg_scale *= arg_scale;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.family == ConsumptionFamily::Zero || self.scale == 0.0
    }

    pub fn validate(&self) -> Result<(), KineticsError> {
        match self.family {
            ConsumptionFamily::Zero => {}
            ConsumptionFamily::Hill2 { k_n } if !(k_n > 0.0 && k_n.is_finite()) => {
                return Err(KineticsError::invalid("k_n", "k_n must be > 0".into()));
            }
            ConsumptionFamily::Monod { k } if !(k > 0.0 && k.is_finite()) => {
                return Err(KineticsError::invalid("k", "k must be > 0".into()));
            }
            ConsumptionFamily::Linear { c } if !(c >= 0.0 && c.is_finite()) => {
                return Err(KineticsError::invalid("c", "c must be >= 0".into()));
            }
            _ => {}
        }
        if !(self.scale >= 0.0 && self.scale.is_finite()) {
            return Err(KineticsError::invalid("scale", "scale must be >= 0".into()));
        }
        if !(self.arg_scale > 0.0 && self.arg_scale.is_finite()) {
            return Err(KineticsError::invalid("arg_scale", "arg_scale must be > 0".into()));
        }
        Ok(())
    }

    /// Evaluates `f` and `f/s` at `s >= 0`.
    #[inline]
    pub fn eval(&self, s: f64) -> ConsumptionValue {
        let y = self.arg_scale * s;
        // (h(y), h(y)/y)
        let (h, h_over_y) = match self.family {
            ConsumptionFamily::Zero => (0.0, 0.0),
            ConsumptionFamily::Hill2 { k_n } => {
                let r = y / (y * y + k_n);
                (y * r, r)
            }
            ConsumptionFamily::Monod { k } => {
                let r = 1.0 / (k + y);
                (y * r, r)
            }
            ConsumptionFamily::Linear { c } => (c * y, c),
        };
        ConsumptionValue {
            f: self.scale * h,
            f_over_s: self.scale * self.arg_scale * h_over_y,
        }
    }
}
