use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{domain, Result};

/// Two-sided 95% standard-normal quantile, fixed to seven digits.
pub const Z95: f64 = 1.959964;

/// Standard-normal quantile for a two-sided interval of the given level.
pub fn two_sided_z(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(domain(format!("confidence level must lie in (0,1), got {level}")));
    }
    if level == 0.95 {
        return Ok(Z95);
    }
    let n = Normal::standard();
    Ok(n.inverse_cdf(0.5 + level / 2.0))
}

pub fn logit(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("logit requires p in (0,1), got {p}")));
    }
    Ok((p / (1.0 - p)).ln())
}

pub fn inv_logit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Scale on which an interval is assumed symmetric and normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    /// Ratio estimates (OR, RR, SIR).
    Log,
    /// Probabilities (penetrance).
    Logit,
}

impl Transform {
    pub fn apply(self, x: f64) -> Result<f64> {
        match self {
            Transform::Log if x > 0.0 && x.is_finite() => Ok(x.ln()),
            Transform::Log => Err(domain(format!("log requires a positive value, got {x}"))),
            Transform::Logit => logit(x),
        }
    }
}

/// Variance on the transformed scale implied by a reported confidence interval.
pub fn ci_to_logvar(
    estimate: f64,
    ci_low: f64,
    ci_high: f64,
    level: f64,
    transform: Transform,
) -> Result<f64> {
    if !(ci_low > 0.0 && estimate > 0.0) {
        return Err(domain(format!(
            "interval ({ci_low}, {ci_high}) and estimate {estimate} must be positive"
        )));
    }
    if ci_low >= ci_high {
        return Err(domain(format!(
            "interval lower bound {ci_low} must be below upper bound {ci_high}"
        )));
    }
    let z = two_sided_z(level)?;
    let width = transform.apply(ci_high)? - transform.apply(ci_low)?;
    let sd = width / (2.0 * z);
    Ok(sd * sd)
}

/// Carrier-by-status 2x2 table. For OR studies the status columns are
/// case/control; for RR studies they are affected/unaffected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Counts2x2 {
    pub carrier_cases: u64,
    pub carrier_controls: u64,
    pub noncarrier_cases: u64,
    pub noncarrier_controls: u64,
}

impl Counts2x2 {
    fn has_zero(&self) -> bool {
        self.carrier_cases == 0
            || self.carrier_controls == 0
            || self.noncarrier_cases == 0
            || self.noncarrier_controls == 0
    }

    /// Woolf odds ratio and log-SE, with the Haldane 0.5 correction when any cell is empty.
    pub fn odds_ratio(&self) -> (f64, f64) {
        if self.has_zero() {
            continuity_corrected_or(self)
        } else {
            woolf(
                self.carrier_cases as f64,
                self.carrier_controls as f64,
                self.noncarrier_cases as f64,
                self.noncarrier_controls as f64,
            )
        }
    }

    /// Affected-rate ratio (carriers over non-carriers) and its log-SE.
    /// Empty affected counts get 0.5 added.
    pub fn risk_ratio(&self) -> Result<(f64, f64)> {
        let n1 = (self.carrier_cases + self.carrier_controls) as f64;
        let n0 = (self.noncarrier_cases + self.noncarrier_controls) as f64;
        if n1 == 0.0 || n0 == 0.0 {
            return Err(domain("risk ratio needs carriers and non-carriers in the table"));
        }
        let x1 = corrected(self.carrier_cases);
        let x0 = corrected(self.noncarrier_cases);
        let p1 = x1 / n1;
        let p0 = x0 / n0;
        let se = ((1.0 - p1) / (n1 * p1) + (1.0 - p0) / (n0 * p0)).max(0.0).sqrt();
        Ok((p1 / p0, se))
    }
}

fn corrected(x: u64) -> f64 {
    if x == 0 {
        0.5
    } else {
        x as f64
    }
}

fn woolf(a: f64, b: f64, c: f64, d: f64) -> (f64, f64) {
    ((a * d) / (b * c), (1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d).sqrt())
}

/// OR and log-SE after adding 0.5 to every cell.
pub fn continuity_corrected_or(counts: &Counts2x2) -> (f64, f64) {
    woolf(
        counts.carrier_cases as f64 + 0.5,
        counts.carrier_controls as f64 + 0.5,
        counts.noncarrier_cases as f64 + 0.5,
        counts.noncarrier_controls as f64 + 0.5,
    )
}

/// Log-density of N(mean, var) at x.
pub fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    let r = x - mean;
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + r * r / var)
}
