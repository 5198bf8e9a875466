//! Per-study log-likelihoods and their sum over a study set.

mod penetrance;
mod quadrature;
mod ratio;

use std::collections::BTreeMap;
use std::sync::Arc;

pub use penetrance::{build_penetrance_cov, simulated_correlation, CovSimulation, PenetranceCov, PenetranceModel};
pub use quadrature::{AgeGrid, QuadratureSpec};
pub use ratio::{mean_log_rr, nu_or, RatioModel};

use crate::domain::{BaselinePenetrance, Modality, StudyRecord, WeibullCurve};
use crate::error::{Error, Result};

/// Study-specific parameters: the carrier curve and, for biased studies,
/// the additive log-scale bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyParams {
    pub curve: WeibullCurve,
    pub bias: Option<f64>,
}

impl StudyParams {
    pub fn unbiased(curve: WeibullCurve) -> Self {
        Self { curve, bias: None }
    }
}

/// A study's likelihood with everything independent of its parameters precomputed.
#[derive(Debug, Clone)]
pub enum StudyModel {
    Ratio(RatioModel),
    Penetrance(PenetranceModel),
}

impl StudyModel {
    pub fn build(
        record: &StudyRecord,
        baseline: &BaselinePenetrance,
        grid: Arc<AgeGrid>,
        cov: Option<&PenetranceCov>,
    ) -> Result<Self> {
        record.validate()?;
        match record.modality {
            Modality::Penetrance => {
                let cov = cov.ok_or_else(|| {
                    Error::Contract(format!("penetrance study `{}` needs a covariance", record.id))
                })?;
                let report = record.penetrance.as_ref().expect("validated");
                Ok(StudyModel::Penetrance(PenetranceModel::new(report, cov)?))
            }
            _ => Ok(StudyModel::Ratio(RatioModel::from_record(record, baseline, grid)?)),
        }
    }

    pub fn loglik(&self, params: &StudyParams) -> f64 {
        match self {
            StudyModel::Ratio(m) => m.loglik_at(m.log_mean(&params.curve), params.bias.unwrap_or(0.0)),
            StudyModel::Penetrance(m) => m.loglik(&params.curve),
        }
    }
}

fn check_bias(record: &StudyRecord, params: &StudyParams) -> Result<()> {
    match (record.biased, params.bias) {
        (false, Some(_)) => Err(Error::Contract(format!(
            "study `{}` is unbiased but a bias term was supplied",
            record.id
        ))),
        (_, Some(b)) if !(b >= 0.0) => Err(Error::Domain(format!("bias must be nonnegative, got {b}"))),
        _ => Ok(()),
    }
}

/// Log-likelihood of an OR/RR/SIR study. A biased study without a bias term is treated as `B = 0`.
pub fn loglik_ratio_study(
    record: &StudyRecord,
    params: &StudyParams,
    baseline: &BaselinePenetrance,
    quad: &QuadratureSpec,
) -> Result<f64> {
    record.validate()?;
    check_bias(record, params)?;
    let model = RatioModel::from_record(record, baseline, Arc::new(quad.grid()?))?;
    let mean = model.try_log_mean(&params.curve)?;
    Ok(model.loglik_at(mean, params.bias.unwrap_or(0.0)))
}

pub fn loglik_penetrance_study(record: &StudyRecord, params: &StudyParams, cov: &PenetranceCov) -> Result<f64> {
    record.validate()?;
    let report = record
        .penetrance
        .as_ref()
        .ok_or_else(|| Error::Contract(format!("study `{}` has no penetrance report", record.id)))?;
    Ok(PenetranceModel::new(report, cov)?.loglik(&params.curve))
}

/// Sum of per-study log-likelihoods, reduced in study-id order.
pub fn joint_loglik(
    records: &[StudyRecord],
    params: &BTreeMap<String, StudyParams>,
    baseline: &BaselinePenetrance,
    quad: &QuadratureSpec,
    covs: &BTreeMap<String, PenetranceCov>,
) -> Result<f64> {
    if params.len() != records.len() {
        return Err(Error::Contract(format!(
            "{} parameter sets for {} studies",
            params.len(),
            records.len()
        )));
    }
    let mut by_id: BTreeMap<&str, &StudyRecord> = BTreeMap::new();
    for r in records {
        if by_id.insert(r.id.as_str(), r).is_some() {
            return Err(Error::Contract(format!("duplicate study id `{}`", r.id)));
        }
    }
    let grid = Arc::new(quad.grid()?);
    let mut total = 0.0;
    for (id, record) in by_id {
        let p = params
            .get(id)
            .ok_or_else(|| Error::Contract(format!("no parameters for study `{id}`")))?;
        check_bias(record, p)?;
        let term = if record.modality == Modality::Penetrance {
            let cov = covs
                .get(id)
                .ok_or_else(|| Error::Contract(format!("no covariance for penetrance study `{id}`")))?;
            loglik_penetrance_study(record, p, cov)?
        } else {
            let m = RatioModel::from_record(record, baseline, grid.clone())?;
            m.loglik_at(m.try_log_mean(&p.curve)?, p.bias.unwrap_or(0.0))
        };
        total += term;
    }
    Ok(total)
}
