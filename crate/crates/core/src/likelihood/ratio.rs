//! Penetrance-to-ratio bridge: OR via the four-integral ratio, RR/SIR via
//! the carrier-to-baseline incidence ratio, each on the log scale.

use std::sync::Arc;

use super::quadrature::{AgeGrid, DensityKernel, QuadratureSpec};
use crate::domain::{normal_logpdf, AgeDistributions, BaselinePenetrance, Modality, StudyRecord, WeibullCurve};
use crate::error::{Error, Result};

const TINY: f64 = 1e-300;

#[derive(Debug, Clone)]
enum Bridge {
    OddsRatio {
        cases: DensityKernel,
        controls: Vec<f64>,
        /// `ln \int f_0 q_c0 - ln \int (1 - F_0) q_h0`
        log_baseline: f64,
    },
    RelativeRisk {
        cases: DensityKernel,
        /// `ln \int f_0 q_0`
        log_baseline: f64,
    },
}

/// Precomputed likelihood for one OR, RR or SIR study.
#[derive(Debug, Clone)]
pub struct RatioModel {
    modality: Modality,
    log_estimate: f64,
    variance: f64,
    bridge: Bridge,
    grid: Arc<AgeGrid>,
}

fn checked(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() && value >= TINY {
        Ok(value)
    } else {
        Err(Error::Degenerate(format!("integral {what} = {value:e} is below 1e-300")))
    }
}

impl RatioModel {
    /// Build from raw inputs; `log_estimate` and `variance` are on the log scale.
    pub fn new(
        modality: Modality,
        log_estimate: f64,
        variance: f64,
        ages: &AgeDistributions,
        baseline: &BaselinePenetrance,
        grid: Arc<AgeGrid>,
    ) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::Domain(format!("log-scale variance must be positive, got {variance}")));
        }
        let base_cdf = |t: f64| baseline.cdf_unchecked(t);
        let bridge = match modality {
            Modality::Or => {
                let k0 = grid.density_kernel(&ages.cases_noncarrier);
                let s0 = grid.survival_kernel(&ages.controls_noncarrier);
                let num = checked(grid.density_integral(&k0, base_cdf), "f0*q_c0")?;
                let den = checked(grid.survival_integral(&s0, base_cdf), "(1-F0)*q_h0")?;
                Bridge::OddsRatio {
                    cases: grid.density_kernel(&ages.cases_carrier),
                    controls: grid.survival_kernel(&ages.controls_carrier),
                    log_baseline: num.ln() - den.ln(),
                }
            }
            Modality::Rr | Modality::Sir => {
                let k0 = grid.density_kernel(&ages.cases_noncarrier);
                let num = checked(grid.density_integral(&k0, base_cdf), "f0*q_0")?;
                Bridge::RelativeRisk {
                    cases: grid.density_kernel(&ages.cases_carrier),
                    log_baseline: num.ln(),
                }
            }
            Modality::Penetrance => {
                return Err(Error::Contract("penetrance studies have no ratio likelihood".into()))
            }
        };
        Ok(Self {
            modality,
            log_estimate,
            variance,
            bridge,
            grid,
        })
    }

    pub fn from_record(record: &StudyRecord, baseline: &BaselinePenetrance, grid: Arc<AgeGrid>) -> Result<Self> {
        let ratio = record
            .ratio
            .as_ref()
            .ok_or_else(|| Error::Contract(format!("study `{}` has no ratio report", record.id)))?;
        Self::new(
            record.modality,
            ratio.estimate.ln(),
            ratio.log_variance(record.modality)?,
            &record.ages,
            baseline,
            grid,
        )
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn log_estimate(&self) -> f64 {
        self.log_estimate
    }

    /// Model-implied log ratio (without bias), with degenerate integrals reported as errors.
    pub fn try_log_mean(&self, curve: &WeibullCurve) -> Result<f64> {
        self.try_log_mean_pow(&self.grid.powers(curve.kappa), curve)
    }

    fn try_log_mean_pow(&self, pow: &[f64], curve: &WeibullCurve) -> Result<f64> {
        match &self.bridge {
            Bridge::OddsRatio {
                cases,
                controls,
                log_baseline,
            } => {
                let (num, den) = self.grid.weibull_pair_pow(pow, curve, cases, controls);
                let num = checked(num, "f_s*q_c1")?;
                let den = checked(den, "(1-F_s)*q_h1")?;
                Ok(num.ln() - den.ln() - log_baseline)
            }
            Bridge::RelativeRisk { cases, log_baseline } => {
                let (num, _) = self.grid.weibull_pair_pow(pow, curve, cases, &[]);
                Ok(checked(num, "f_s*q_1")?.ln() - log_baseline)
            }
        }
    }

    /// As [`Self::try_log_mean`] but maps degeneracy to NaN for the sampler.
    pub fn log_mean(&self, curve: &WeibullCurve) -> f64 {
        self.try_log_mean(curve).unwrap_or(f64::NAN)
    }

    /// `t^kappa` on this model's grid, reusable across scale changes.
    pub fn powers(&self, kappa: f64) -> Vec<f64> {
        self.grid.powers(kappa)
    }

    /// [`Self::log_mean`] with precomputed [`Self::powers`] for `curve.kappa`.
    pub fn log_mean_pow(&self, pow: &[f64], curve: &WeibullCurve) -> f64 {
        self.try_log_mean_pow(pow, curve).unwrap_or(f64::NAN)
    }

    /// Normal log-density of the reported log ratio; `-inf` when the mean is not finite.
    pub fn loglik_at(&self, log_mean: f64, bias: f64) -> f64 {
        if !log_mean.is_finite() {
            return f64::NEG_INFINITY;
        }
        normal_logpdf(self.log_estimate, log_mean + bias, self.variance)
    }
}

/// OR implied by penetrance (ratio of case to control odds-like integrals).
pub fn nu_or(
    curve: &WeibullCurve,
    baseline: &BaselinePenetrance,
    ages: &AgeDistributions,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let grid = Arc::new(quad.grid()?);
    let model = RatioModel::new(Modality::Or, 0.0, 1.0, ages, baseline, grid)?;
    Ok(model.try_log_mean(curve)?.exp())
}

/// Log relative risk implied by penetrance. Uses `cases_carrier` as `q_1`
/// and `cases_noncarrier` as `q_0`.
pub fn mean_log_rr(
    curve: &WeibullCurve,
    baseline: &BaselinePenetrance,
    ages: &AgeDistributions,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let grid = Arc::new(quad.grid()?);
    RatioModel::new(Modality::Rr, 0.0, 1.0, ages, baseline, grid)?.try_log_mean(curve)
}
