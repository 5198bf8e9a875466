use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Shape/scale Weibull curve used as a cumulative penetrance function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeibullCurve {
    pub kappa: f64,
    pub lambda: f64,
}

impl WeibullCurve {
    pub fn new(kappa: f64, lambda: f64) -> Result<Self> {
        let curve = Self { kappa, lambda };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(domain(format!("Weibull shape must be positive, got {}", self.kappa)));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(domain(format!("Weibull scale must be positive, got {}", self.lambda)));
        }
        Ok(())
    }

    /// `1 - exp(-(t/lambda)^kappa)`; rejects negative or non-finite ages.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        check_age(t)?;
        Ok(self.cdf_unchecked(t))
    }

    pub fn survival(&self, t: f64) -> Result<f64> {
        check_age(t)?;
        Ok(self.survival_unchecked(t))
    }

    pub fn pdf(&self, t: f64) -> Result<f64> {
        check_age(t)?;
        if t == 0.0 {
            return Ok(match self.kappa.partial_cmp(&1.0) {
                Some(std::cmp::Ordering::Greater) => 0.0,
                Some(std::cmp::Ordering::Equal) => 1.0 / self.lambda,
                _ => f64::INFINITY,
            });
        }
        let x = (t / self.lambda).powf(self.kappa);
        Ok(self.kappa * x / t * (-x).exp())
    }

    #[inline]
    pub(crate) fn cdf_unchecked(&self, t: f64) -> f64 {
        -(-(t / self.lambda).powf(self.kappa)).exp_m1()
    }

    #[inline]
    pub(crate) fn survival_unchecked(&self, t: f64) -> f64 {
        (-(t / self.lambda).powf(self.kappa)).exp()
    }

    /// Inverse cdf; `u` in [0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        self.lambda * (-(-u).ln_1p()).powf(1.0 / self.kappa)
    }
}

fn check_age(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(domain(format!("age must be finite and nonnegative, got {t}")));
    }
    Ok(())
}

/// Non-carrier penetrance, optionally renormalized to reach 1 at `truncation_age`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselinePenetrance {
    pub curve: WeibullCurve,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_age: Option<f64>,
}

impl Default for BaselinePenetrance {
    fn default() -> Self {
        Self {
            curve: WeibullCurve {
                kappa: 3.65,
                lambda: 143.2426,
            },
            truncation_age: None,
        }
    }
}

impl BaselinePenetrance {
    pub fn truncated(curve: WeibullCurve, at: f64) -> Result<Self> {
        let b = Self {
            curve,
            truncation_age: Some(at),
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        self.curve.validate()?;
        if let Some(t) = self.truncation_age {
            if !(t.is_finite() && t > 0.0) {
                return Err(domain(format!("truncation age must be positive, got {t}")));
            }
        }
        Ok(())
    }

    fn mass(&self) -> f64 {
        match self.truncation_age {
            Some(t) => self.curve.cdf_unchecked(t),
            None => 1.0,
        }
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        check_age(t)?;
        Ok(self.cdf_unchecked(t))
    }

    pub(crate) fn cdf_unchecked(&self, t: f64) -> f64 {
        match self.truncation_age {
            Some(cut) if t >= cut => 1.0,
            _ => self.curve.cdf_unchecked(t) / self.mass(),
        }
    }

    /// Draw an event time from the (possibly truncated) distribution.
    pub fn sample_time(&self, u: f64) -> f64 {
        self.curve.quantile(u * self.mass())
    }
}
