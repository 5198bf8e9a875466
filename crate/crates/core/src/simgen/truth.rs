use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{BaselinePenetrance, WeibullCurve};
use crate::error::{Error, Result};
use crate::survival::Censoring;

/// Normal law given as (mean, sd).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalLaw {
    pub mean: f64,
    pub sd: f64,
}

impl NormalLaw {
    /// Draw, redrawing nonpositive values.
    pub fn sample_positive<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.sd == 0.0 {
            return self.mean;
        }
        let n = Normal::new(self.mean, self.sd).expect("validated sd");
        loop {
            let x = n.sample(rng);
            if x > 0.0 {
                return x;
            }
        }
    }
}

/// Gamma law in shape/rate form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaLaw {
    pub shape: f64,
    pub rate: f64,
}

impl GammaLaw {
    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Gamma::new(self.shape, 1.0 / self.rate)
            .expect("validated law")
            .sample(rng)
    }
}

/// Data-generating truth for the simulation study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthSpec {
    pub kappa_law: NormalLaw,
    pub lambda_law: NormalLaw,
    pub censoring: Censoring,
    pub carrier_prob: f64,
    pub population: usize,
    pub noncarrier: BaselinePenetrance,
    pub or_bias_law: GammaLaw,
    pub rr_bias_law: GammaLaw,
}

impl Default for TruthSpec {
    fn default() -> Self {
        Self {
            kappa_law: NormalLaw { mean: 4.55, sd: 0.525 },
            lambda_law: NormalLaw { mean: 95.25, sd: 12.375 },
            censoring: Censoring::default(),
            carrier_prob: 0.01,
            population: 2_000_000,
            noncarrier: BaselinePenetrance::truncated(WeibullCurve { kappa: 3.65, lambda: 143.2426 }, 185.0)
                .expect("valid default"),
            or_bias_law: GammaLaw { shape: 2.312, rate: 3.4 },
            rr_bias_law: GammaLaw { shape: 2.04, rate: 5.83 },
        }
    }
}

impl TruthSpec {
    pub fn validate(&self) -> Result<()> {
        let scales = [
            self.kappa_law.mean,
            self.lambda_law.mean,
            self.censoring.sd,
            self.censoring.max_age,
            self.or_bias_law.shape,
            self.or_bias_law.rate,
            self.rr_bias_law.shape,
            self.rr_bias_law.rate,
        ];
        if scales.iter().any(|&x| !(x > 0.0 && x.is_finite()))
            || !(self.kappa_law.sd >= 0.0 && self.lambda_law.sd >= 0.0)
        {
            return Err(Error::Domain("truth laws need positive, finite parameters".into()));
        }
        if !(self.carrier_prob > 0.0 && self.carrier_prob < 1.0) || self.population == 0 {
            return Err(Error::Domain(
                "carrier probability must lie in (0, 1) and the population be nonempty".into(),
            ));
        }
        self.noncarrier.validate()
    }

    /// A study-specific carrier curve.
    pub fn draw_curve<R: Rng + ?Sized>(&self, rng: &mut R) -> WeibullCurve {
        WeibullCurve {
            kappa: self.kappa_law.sample_positive(rng),
            lambda: self.lambda_law.sample_positive(rng),
        }
    }
}

/// Monte Carlo mean of carrier cdfs over the truth laws.
pub fn true_penetrance_oracle(truth: &TruthSpec, ages: &[f64], n_draws: usize, seed: u64) -> Result<Vec<f64>> {
    truth.validate()?;
    if n_draws == 0 {
        return Err(Error::Contract("need at least one draw".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sums = vec![0.0; ages.len()];
    for _ in 0..n_draws {
        let c = truth.draw_curve(&mut rng);
        for (s, &t) in sums.iter_mut().zip(ages) {
            *s += c.cdf_unchecked(t);
        }
    }
    Ok(sums.into_iter().map(|s| s / n_draws as f64).collect())
}
