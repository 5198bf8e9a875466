use serde::{Deserialize, Serialize};

use super::stats::{ci_to_logvar, Counts2x2, Transform};
use crate::error::{Error, Result};

/// Normal age distribution summary (years).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgeSummary {
    pub mean: f64,
    pub sd: f64,
}

impl AgeSummary {
    /// Mean and SD of age at breast-cancer onset in the US population.
    pub const DEFAULT: AgeSummary = AgeSummary {
        mean: 63.0,
        sd: 14.00726,
    };

    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        let s = Self { mean, sd };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sd.is_finite() && self.sd > 0.0) {
            return Err(Error::Domain(format!("age SD must be positive, got {}", self.sd)));
        }
        if !(self.mean > 0.0 && self.mean < 120.0) {
            return Err(Error::Domain(format!(
                "mean age must lie in (0, 120), got {}",
                self.mean
            )));
        }
        Ok(())
    }

    pub fn density(&self, t: f64) -> f64 {
        let z = (t - self.mean) / self.sd;
        (-0.5 * z * z).exp() / (self.sd * (2.0 * std::f64::consts::PI).sqrt())
    }
}

impl Default for AgeSummary {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Age distributions entering the OR/RR bridge integrals. RR and SIR
/// studies only use the two case distributions (carriers `q_1`, non-carriers `q_0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgeDistributions {
    pub cases_carrier: AgeSummary,
    pub cases_noncarrier: AgeSummary,
    pub controls_carrier: AgeSummary,
    pub controls_noncarrier: AgeSummary,
}

impl AgeDistributions {
    pub fn uniform(s: AgeSummary) -> Self {
        Self {
            cases_carrier: s,
            cases_noncarrier: s,
            controls_carrier: s,
            controls_noncarrier: s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cases_carrier.validate()?;
        self.cases_noncarrier.validate()?;
        self.controls_carrier.validate()?;
        self.controls_noncarrier.validate()
    }
}

impl Default for AgeDistributions {
    fn default() -> Self {
        Self::uniform(AgeSummary::DEFAULT)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modality {
    #[serde(rename = "penetrance")]
    Penetrance,
    #[serde(rename = "rr")]
    Rr,
    #[serde(rename = "sir")]
    Sir,
    #[serde(rename = "or")]
    Or,
}

impl Modality {
    pub fn is_ratio(self) -> bool {
        !matches!(self, Modality::Penetrance)
    }

    /// RR and SIR share one likelihood under the rare-variant assumption.
    pub fn is_relative_risk(self) -> bool {
        matches!(self, Modality::Rr | Modality::Sir)
    }

    pub fn label(self) -> &'static str {
        match self {
            Modality::Penetrance => "penetrance",
            Modality::Rr => "rr",
            Modality::Sir => "sir",
            Modality::Or => "or",
        }
    }
}

/// Age-specific cumulative risks with their confidence intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenetranceReport {
    pub ages: Vec<f64>,
    pub values: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
}

impl PenetranceReport {
    pub fn len(&self) -> usize {
        self.ages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ages.is_empty()
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let m = self.ages.len();
        if m == 0 {
            return Err("penetrance report has no ages".into());
        }
        if self.values.len() != m || self.ci_low.len() != m || self.ci_high.len() != m {
            return Err(format!(
                "ages, values, ci_low and ci_high must share length {m} (got {}, {}, {})",
                self.values.len(),
                self.ci_low.len(),
                self.ci_high.len()
            ));
        }
        if self.ages.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err("ages must be positive".into());
        }
        if self.ages.windows(2).any(|w| w[0] >= w[1]) {
            return Err("ages must be strictly increasing".into());
        }
        for i in 0..m {
            let (lo, v, hi) = (self.ci_low[i], self.values[i], self.ci_high[i]);
            if !(v > 0.0 && v < 1.0) {
                return Err(format!("penetrance at age {} must lie strictly in (0,1), got {v}", self.ages[i]));
            }
            if !(lo > 0.0 && hi < 1.0 && lo < v && v < hi) {
                return Err(format!(
                    "interval ({lo}, {hi}) at age {} must satisfy 0 < low < {v} < high < 1",
                    self.ages[i]
                ));
            }
        }
        Ok(())
    }

    /// Logit-scale variances implied by each age's interval.
    pub fn logit_variances(&self) -> Result<Vec<f64>> {
        (0..self.len())
            .map(|i| {
                ci_to_logvar(
                    self.values[i],
                    self.ci_low[i],
                    self.ci_high[i],
                    0.95,
                    Transform::Logit,
                )
            })
            .collect()
    }
}

/// Scalar ratio estimate (OR, RR or SIR).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioReport {
    pub estimate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_high: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Counts2x2>,
}

impl RatioReport {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.estimate.is_finite() && self.estimate > 0.0) {
            return Err(format!("estimate must be positive, got {}", self.estimate));
        }
        match (self.ci_low, self.ci_high) {
            (Some(lo), Some(hi)) => {
                if !(lo > 0.0 && lo < self.estimate && self.estimate < hi && hi.is_finite()) {
                    return Err(format!(
                        "interval ({lo}, {hi}) must satisfy 0 < low < {} < high",
                        self.estimate
                    ));
                }
            }
            (None, None) => {
                if self.counts.is_none() {
                    return Err("either a confidence interval or a 2x2 count table is required".into());
                }
            }
            _ => return Err("confidence interval needs both bounds".into()),
        }
        Ok(())
    }

    /// Variance of the log estimate: from the interval when present,
    /// otherwise from the count table.
    pub fn log_variance(&self, modality: Modality) -> Result<f64> {
        if let (Some(lo), Some(hi)) = (self.ci_low, self.ci_high) {
            return ci_to_logvar(self.estimate, lo, hi, 0.95, Transform::Log);
        }
        let counts = self
            .counts
            .ok_or_else(|| Error::Domain("ratio report has neither interval nor counts".into()))?;
        let se = match modality {
            Modality::Or => counts.odds_ratio().1,
            Modality::Rr | Modality::Sir => counts.risk_ratio()?.1,
            Modality::Penetrance => {
                return Err(Error::Contract("penetrance studies carry no ratio".into()))
            }
        };
        Ok(se * se)
    }
}

/// One study's reported evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyRecord {
    pub id: String,
    pub modality: Modality,
    #[serde(default)]
    pub biased: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penetrance: Option<PenetranceReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<RatioReport>,
    #[serde(default)]
    pub ages: AgeDistributions,
    #[serde(default)]
    pub age_reported: bool,
}

impl StudyRecord {
    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|reason| Error::InvalidStudy {
            id: self.id.clone(),
            reason,
        })
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("study id is empty".into());
        }
        match self.modality {
            Modality::Penetrance => {
                if self.ratio.is_some() {
                    return Err("penetrance study must not carry a ratio report".into());
                }
                if self.biased {
                    return Err("penetrance studies are assumed free of ascertainment bias".into());
                }
                self.penetrance
                    .as_ref()
                    .ok_or_else(|| "penetrance study is missing its penetrance report".to_string())?
                    .validate()?;
            }
            _ => {
                if self.penetrance.is_some() {
                    return Err("ratio study must not carry a penetrance report".into());
                }
                self.ratio
                    .as_ref()
                    .ok_or_else(|| format!("{} study is missing its ratio report", self.modality.label()))?
                    .validate()?;
            }
        }
        if self.sample_size == Some(0) {
            return Err("sample size must be positive".into());
        }
        self.ages.validate().map_err(|e| e.to_string())
    }
}
