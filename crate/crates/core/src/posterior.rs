//! Meta-analysis penetrance curve from hyperparameter draws.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::domain::WeibullCurve;
use crate::error::{Error, Result};
use crate::inference::{ChainTrace, Hyper};

pub const DECADE_AGES: [f64; 5] = [40.0, 50.0, 60.0, 70.0, 80.0];

/// Ages 20, 21, ..., 95.
pub fn fine_ages() -> Vec<f64> {
    (20..=95).map(f64::from).collect()
}

/// Row `t` is the Weibull(a b, c d) cdf at each age.
pub fn penetrance_draws(hyper: &[Hyper], ages: &[f64]) -> Vec<Vec<f64>> {
    hyper
        .iter()
        .map(|h| {
            let curve = WeibullCurve {
                kappa: h.kappa(),
                lambda: h.lambda(),
            };
            ages.iter().map(|&t| curve.cdf_unchecked(t)).collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorCurve {
    pub ages: Vec<f64>,
    pub mean: Vec<f64>,
    pub cri_low: Vec<f64>,
    pub cri_high: Vec<f64>,
    pub level: f64,
}

impl PosteriorCurve {
    /// `(mean, low, high)` at an age on the curve's grid.
    pub fn at(&self, age: f64) -> Option<(f64, f64, f64)> {
        let i = self.ages.iter().position(|&a| a == age)?;
        Some((self.mean[i], self.cri_low[i], self.cri_high[i]))
    }

    pub fn is_monotone(&self) -> bool {
        self.mean.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "age,mean,cri_low,cri_high")?;
        for i in 0..self.ages.len() {
            writeln!(
                w,
                "{},{:.10},{:.10},{:.10}",
                self.ages[i], self.mean[i], self.cri_low[i], self.cri_high[i]
            )?;
        }
        Ok(())
    }
}

/// Linear-interpolation quantile of sorted data (`(n - 1) p` positioning).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-age mean and equal-tailed interval. Columns are sorted before
/// summing, so the result does not depend on draw order.
pub fn summarize_curve(draws: &[Vec<f64>], ages: &[f64], level: f64) -> Result<PosteriorCurve> {
    if draws.len() < 2 {
        return Err(Error::Contract(format!("need at least 2 draws, got {}", draws.len())));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("credible level must lie in (0, 1), got {level}")));
    }
    if draws.iter().any(|r| r.len() != ages.len()) {
        return Err(Error::Contract("draw rows do not match the age grid".into()));
    }
    let tail = (1.0 - level) / 2.0;
    let mut curve = PosteriorCurve {
        ages: ages.to_vec(),
        mean: Vec::with_capacity(ages.len()),
        cri_low: Vec::with_capacity(ages.len()),
        cri_high: Vec::with_capacity(ages.len()),
        level,
    };
    for j in 0..ages.len() {
        let mut col: Vec<f64> = draws.iter().map(|r| r[j]).collect();
        col.sort_by(f64::total_cmp);
        curve.mean.push(col.iter().sum::<f64>() / col.len() as f64);
        curve.cri_low.push(quantile_sorted(&col, tail));
        curve.cri_high.push(quantile_sorted(&col, 1.0 - tail));
    }
    Ok(curve)
}

/// Pooled curve over all chains.
pub fn posterior_curve(traces: &[ChainTrace], ages: &[f64], level: f64) -> Result<PosteriorCurve> {
    let hyper: Vec<Hyper> = traces.iter().flat_map(|t| t.hyper.iter().copied()).collect();
    summarize_curve(&penetrance_draws(&hyper, ages), ages, level)
}

/// One curve per chain, for diagnostics.
pub fn chain_curves(traces: &[ChainTrace], ages: &[f64], level: f64) -> Result<Vec<PosteriorCurve>> {
    traces
        .iter()
        .map(|t| summarize_curve(&penetrance_draws(&t.hyper, ages), ages, level))
        .collect()
}
