//! Carrier cohorts with right censoring and the Kaplan-Meier estimator
//! (Greenwood variance, log-log intervals).

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::domain::{PenetranceReport, WeibullCurve};
use crate::error::{Error, Result};

/// One subject's observed follow-up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub time: f64,
    pub event: bool,
}

/// Random censoring plus an administrative cutoff age.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Censoring {
    pub mean: f64,
    pub sd: f64,
    pub max_age: f64,
}

impl Default for Censoring {
    fn default() -> Self {
        Self {
            mean: 85.0,
            sd: 10.0,
            max_age: 95.0,
        }
    }
}

impl Censoring {
    /// Observed time is `min(event, censor, max_age)`; the subject is
    /// affected only when the event comes strictly first.
    pub fn observe<R: Rng + ?Sized>(&self, event_time: f64, rng: &mut R) -> Observation {
        let censor = Normal::new(self.mean, self.sd)
            .expect("censoring sd is positive")
            .sample(rng);
        let cut = censor.min(self.max_age);
        if event_time < cut {
            Observation {
                time: event_time,
                event: true,
            }
        } else {
            Observation {
                time: cut.max(0.0),
                event: false,
            }
        }
    }
}

/// Simulate `n` carriers whose event times follow `curve`.
pub fn simulate_cohort<R: Rng + ?Sized>(
    curve: &WeibullCurve,
    n: usize,
    censoring: &Censoring,
    rng: &mut R,
) -> Vec<Observation> {
    (0..n)
        .map(|_| {
            let t = curve.quantile(rng.random::<f64>());
            censoring.observe(t, rng)
        })
        .collect()
}

/// Fitted product-limit curve, stored at distinct event times.
#[derive(Debug, Clone)]
pub struct KaplanMeier {
    times: Vec<f64>,
    survival: Vec<f64>,
    greenwood: Vec<f64>,
    /// Observed times sorted ascending, for at-risk lookups.
    sorted: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmPoint {
    pub survival: f64,
    /// Greenwood sum `sum d / (n (n - d))` up to the age.
    pub greenwood: f64,
    pub at_risk: usize,
}

impl KaplanMeier {
    pub fn fit(obs: &[Observation]) -> Self {
        let mut sorted_obs: Vec<Observation> = obs.to_vec();
        sorted_obs.sort_by(|a, b| a.time.total_cmp(&b.time));
        let mut times = Vec::new();
        let mut survival = Vec::new();
        let mut greenwood = Vec::new();
        let mut s = 1.0;
        let mut g = 0.0;
        let n = sorted_obs.len();
        let mut i = 0;
        while i < n {
            let t = sorted_obs[i].time;
            let at_risk = n - i;
            let mut deaths = 0usize;
            let mut j = i;
            while j < n && sorted_obs[j].time == t {
                deaths += usize::from(sorted_obs[j].event);
                j += 1;
            }
            if deaths > 0 {
                let (d, r) = (deaths as f64, at_risk as f64);
                s *= 1.0 - d / r;
                if at_risk > deaths {
                    g += d / (r * (r - d));
                }
                times.push(t);
                survival.push(s);
                greenwood.push(g);
            }
            i = j;
        }
        Self {
            times,
            survival,
            greenwood,
            sorted: sorted_obs.iter().map(|o| o.time).collect(),
        }
    }

    /// Estimate at `age`, or `None` when nobody remains under observation
    /// and the curve has not already reached zero.
    pub fn at(&self, age: f64) -> Option<KmPoint> {
        let k = self.times.partition_point(|&t| t <= age);
        let (survival, greenwood) = if k == 0 {
            (1.0, 0.0)
        } else {
            (self.survival[k - 1], self.greenwood[k - 1])
        };
        let at_risk = self.sorted.len() - self.sorted.partition_point(|&t| t < age);
        if at_risk == 0 && survival > 0.0 {
            return None;
        }
        Some(KmPoint {
            survival,
            greenwood,
            at_risk,
        })
    }

    /// Cumulative risk `1 - S(age)` with a log-log Greenwood interval, when
    /// the estimate is strictly inside (0, 1).
    pub fn penetrance_with_ci(&self, age: f64, z: f64) -> Option<(f64, f64, f64)> {
        let p = self.at(age)?;
        let s = p.survival;
        if !(s > 0.0 && s < 1.0) || p.greenwood <= 0.0 {
            return None;
        }
        let ln_s = s.ln();
        let se = p.greenwood.sqrt() / ln_s.abs();
        let s_low = s.powf((z * se).exp());
        let s_high = s.powf((-z * se).exp());
        let (lo, hi) = (1.0 - s_high, 1.0 - s_low);
        let f = 1.0 - s;
        (lo > 0.0 && hi < 1.0 && lo < f && f < hi).then_some((f, lo, hi))
    }

    /// Penetrance report at the requested ages; `None` if any age is unusable.
    pub fn report(&self, ages: &[f64], z: f64) -> Option<PenetranceReport> {
        let mut r = PenetranceReport {
            ages: ages.to_vec(),
            values: Vec::with_capacity(ages.len()),
            ci_low: Vec::with_capacity(ages.len()),
            ci_high: Vec::with_capacity(ages.len()),
        };
        for &a in ages {
            let (f, lo, hi) = self.penetrance_with_ci(a, z)?;
            r.values.push(f);
            r.ci_low.push(lo);
            r.ci_high.push(hi);
        }
        Some(r)
    }
}

/// Simulate cohorts until one yields a usable report, up to `max_tries`.
pub fn simulated_report<R: Rng + ?Sized>(
    curve: &WeibullCurve,
    n: usize,
    censoring: &Censoring,
    ages: &[f64],
    max_tries: usize,
    rng: &mut R,
) -> Result<PenetranceReport> {
    if n == 0 {
        return Err(Error::Contract("cohort size must be positive".into()));
    }
    for _ in 0..max_tries {
        let obs = simulate_cohort(curve, n, censoring, rng);
        if let Some(r) = KaplanMeier::fit(&obs).report(ages, crate::domain::Z95) {
            return Ok(r);
        }
    }
    Err(Error::Degenerate(format!(
        "no usable Kaplan-Meier estimate at ages {ages:?} after {max_tries} cohorts of {n}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn obs(time: f64, event: bool) -> Observation {
        Observation { time, event }
    }

    #[test]
    fn hand_computed_toy() {
        let km = KaplanMeier::fit(&[obs(2.0, false), obs(3.0, true), obs(4.0, false), obs(5.0, true)]);
        assert_eq!(km.at(2.5).unwrap().survival, 1.0);
        assert!((km.at(3.0).unwrap().survival - 2.0 / 3.0).abs() < 1e-15);
        assert!((km.at(4.5).unwrap().survival - 2.0 / 3.0).abs() < 1e-15);
        let end = km.at(5.0).unwrap();
        assert_eq!(end.survival, 0.0);
        assert_eq!(1.0 - end.survival, 1.0);
        // Greenwood at t = 3: 1 / (3 * 2)
        assert!((km.at(3.0).unwrap().greenwood - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn undefined_after_all_censored() {
        let km = KaplanMeier::fit(&[obs(20.0, false), obs(30.0, false), obs(35.0, false)]);
        assert!(km.at(40.0).is_none());
        assert!(km.report(&[40.0], 1.96).is_none());
    }

    #[test]
    fn censored_cohort_triggers_regeneration_error() {
        // An enormous scale pushes every event past follow-up.
        let curve = WeibullCurve::new(4.0, 1e9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = simulated_report(&curve, 50, &Censoring::default(), &[40.0], 3, &mut rng);
        assert!(matches!(err, Err(Error::Degenerate(_))));
    }

    #[test]
    fn interval_brackets_estimate() {
        let curve = WeibullCurve::new(4.55, 95.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = simulated_report(&curve, 500, &Censoring::default(), &[40.0, 60.0, 80.0], 10, &mut rng)
            .unwrap();
        r.validate().unwrap();
    }
}
