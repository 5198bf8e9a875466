use serde::{Deserialize, Serialize};

use crate::domain::{AgeSummary, WeibullCurve};
use crate::error::{Error, Result};

/// Uniform composite-Simpson grid over an age range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            lower: 0.0,
            upper: 120.0,
            points: 1201,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower >= 0.0) {
            return Err(Error::Contract("quadrature bounds must be finite and nonnegative".into()));
        }
        if self.lower >= self.upper {
            return Err(Error::Contract(format!(
                "quadrature lower bound {} must be below upper bound {}",
                self.lower, self.upper
            )));
        }
        if self.points < 3 || self.points % 2 == 0 {
            return Err(Error::Contract(format!(
                "Simpson rule needs an odd number of points >= 3, got {}",
                self.points
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<AgeGrid> {
        self.validate()?;
        let n = self.points;
        let h = (self.upper - self.lower) / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| self.lower + h * i as f64).collect();
        let weights = (0..n)
            .map(|i| {
                let c = if i == 0 || i == n - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect();
        let ln_nodes = nodes.iter().map(|t| t.ln()).collect();
        Ok(AgeGrid {
            lower: self.lower,
            upper: self.upper,
            nodes,
            ln_nodes,
            weights,
        })
    }
}

/// Materialized Simpson nodes and weights.
#[derive(Debug, Clone)]
pub struct AgeGrid {
    pub(crate) lower: f64,
    pub(crate) upper: f64,
    pub(crate) nodes: Vec<f64>,
    ln_nodes: Vec<f64>,
    pub(crate) weights: Vec<f64>,
}

/// Weights for `\int f(t) q(t) dt` with `f = F'`, rewritten by parts as
/// `F(U) q(U) - F(L) q(L) + \int F(t) (t - mu)/sd^2 q(t) dt` so that only
/// the bounded cdf is ever evaluated on the grid.
#[derive(Debug, Clone)]
pub(crate) struct DensityKernel {
    by_parts: Vec<f64>,
    q_lower: f64,
    q_upper: f64,
}

impl AgeGrid {
    pub fn simpson(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * g(t)).sum()
    }

    pub(crate) fn density_kernel(&self, q: &AgeSummary) -> DensityKernel {
        let var = q.sd * q.sd;
        DensityKernel {
            by_parts: self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(&t, &w)| w * (t - q.mean) / var * q.density(t))
                .collect(),
            q_lower: q.density(self.lower),
            q_upper: q.density(self.upper),
        }
    }

    pub(crate) fn survival_kernel(&self, q: &AgeSummary) -> Vec<f64> {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * q.density(t))
            .collect()
    }

    /// `\int f q` for an arbitrary cdf.
    pub(crate) fn density_integral(&self, k: &DensityKernel, cdf: impl Fn(f64) -> f64) -> f64 {
        let interior: f64 = self.nodes.iter().zip(&k.by_parts).map(|(&t, &w)| w * cdf(t)).sum();
        cdf(self.upper) * k.q_upper - cdf(self.lower) * k.q_lower + interior
    }

    /// `\int (1 - F) q` for an arbitrary cdf.
    pub(crate) fn survival_integral(&self, k: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(k).map(|(&t, &w)| w * (1.0 - cdf(t))).sum()
    }

    /// `t^kappa` at every node.
    pub(crate) fn powers(&self, kappa: f64) -> Vec<f64> {
        self.ln_nodes.iter().map(|&lt| (kappa * lt).exp()).collect()
    }

    /// Both Weibull integrals in a single pass: `(\int f q_d, \int (1-F) q_s)`.
    /// `surv` may be empty when only the density integral is needed.
    #[cfg(test)]
    pub(crate) fn weibull_pair(
        &self,
        curve: &WeibullCurve,
        dens: &DensityKernel,
        surv: &[f64],
    ) -> (f64, f64) {
        self.weibull_pair_pow(&self.powers(curve.kappa), curve, dens, surv)
    }

    /// As [`Self::weibull_pair`] with `pow = self.powers(curve.kappa)` supplied,
    /// so a scale-only change costs one exponential per node.
    pub(crate) fn weibull_pair_pow(
        &self,
        pow: &[f64],
        curve: &WeibullCurve,
        dens: &DensityKernel,
        surv: &[f64],
    ) -> (f64, f64) {
        let scale = (-curve.kappa * curve.lambda.ln()).exp();
        let mut d = 0.0;
        let mut s = 0.0;
        if surv.is_empty() {
            for (&p, &wd) in pow.iter().zip(&dens.by_parts) {
                d += wd * -(-p * scale).exp_m1();
            }
        } else {
            for ((&p, &wd), &ws) in pow.iter().zip(&dens.by_parts).zip(surv) {
                let surv_t = (-p * scale).exp();
                d += wd * (1.0 - surv_t);
                s += ws * surv_t;
            }
        }
        let f_up = curve.cdf_unchecked(self.upper);
        let f_lo = curve.cdf_unchecked(self.lower);
        (d + f_up * dens.q_upper - f_lo * dens.q_lower, s)
    }
}
