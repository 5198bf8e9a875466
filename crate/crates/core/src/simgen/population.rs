use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::design::ControlAges;
use super::truth::{GammaLaw, TruthSpec};
use crate::domain::{AgeDistributions, AgeSummary, Counts2x2, Modality, RatioReport, Z95};
use crate::error::{Error, Result};

/// Simulated cohort. `age` is the age at diagnosis for affected subjects
/// and the age at censoring otherwise.
#[derive(Debug, Clone)]
pub struct Population {
    pub age: Vec<f64>,
    pub carrier: Vec<bool>,
    pub affected: Vec<bool>,
    cases: Vec<u32>,
    controls: Vec<u32>,
    carriers: Vec<u32>,
    noncarriers: Vec<u32>,
}

impl Population {
    pub fn len(&self) -> usize {
        self.age.len()
    }

    pub fn is_empty(&self) -> bool {
        self.age.is_empty()
    }

    pub fn n_cases(&self) -> usize {
        self.cases.len()
    }

    pub fn n_controls(&self) -> usize {
        self.controls.len()
    }

    pub fn n_carriers(&self) -> usize {
        self.carriers.len()
    }

    pub fn n_noncarriers(&self) -> usize {
        self.noncarriers.len()
    }
}

/// Carriers draw their own Weibull curve from the truth laws, so carrier
/// event times follow the population-average curve. Non-carriers use the
/// truncated baseline.
pub fn gen_population(truth: &TruthSpec, seed: u64) -> Result<Population> {
    truth.validate()?;
    if truth.population > u32::MAX as usize {
        return Err(Error::Contract("population too large".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = truth.population;
    let mut pop = Population {
        age: Vec::with_capacity(n),
        carrier: Vec::with_capacity(n),
        affected: Vec::with_capacity(n),
        cases: Vec::new(),
        controls: Vec::new(),
        carriers: Vec::new(),
        noncarriers: Vec::new(),
    };
    for i in 0..n as u32 {
        let carrier = rng.random::<f64>() < truth.carrier_prob;
        let event = if carrier {
            truth.draw_curve(&mut rng).quantile(rng.random())
        } else {
            truth.noncarrier.sample_time(rng.random())
        };
        let obs = truth.censoring.observe(event, &mut rng);
        pop.age.push(obs.time);
        pop.carrier.push(carrier);
        pop.affected.push(obs.event);
        if obs.event {
            pop.cases.push(i)
        } else {
            pop.controls.push(i)
        }
        if carrier {
            pop.carriers.push(i)
        } else {
            pop.noncarriers.push(i)
        }
    }
    Ok(pop)
}

/// Generated ratio study before any bias is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedRatio {
    pub report: RatioReport,
    pub counts: Counts2x2,
    pub ages: AgeDistributions,
}

fn draw<R: Rng + ?Sized>(rng: &mut R, pool: &[u32], k: usize, what: &str) -> Result<Vec<u32>> {
    if k > pool.len() {
        return Err(Error::Contract(format!(
            "asked for {k} {what} but the population has {}",
            pool.len()
        )));
    }
    Ok(index::sample(rng, pool.len(), k).into_iter().map(|j| pool[j]).collect())
}

/// Mean and sd of ages; `None` below two subjects.
fn age_summary(pop: &Population, ids: impl Iterator<Item = u32>) -> Option<AgeSummary> {
    let ages: Vec<f64> = ids.map(|i| pop.age[i as usize]).collect();
    if ages.len() < 2 {
        return None;
    }
    let n = ages.len() as f64;
    let mean = ages.iter().sum::<f64>() / n;
    let sd = (ages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    AgeSummary::new(mean, sd).ok()
}

fn ci_report(estimate: f64, se: f64) -> RatioReport {
    RatioReport {
        estimate,
        ci_low: Some(estimate * (-Z95 * se).exp()),
        ci_high: Some(estimate * (Z95 * se).exp()),
        counts: None,
    }
}

/// Case-control sample. Case distributions are the cases' age summary;
/// control distributions copy it unless `control_ages` is `Sampled`.
pub fn gen_or_study<R: Rng + ?Sized>(
    pop: &Population,
    n_cases: usize,
    n_controls: usize,
    control_ages: ControlAges,
    rng: &mut R,
) -> Result<GeneratedRatio> {
    let cases = draw(rng, &pop.cases, n_cases, "cases")?;
    let controls = draw(rng, &pop.controls, n_controls, "controls")?;
    let carrier_cases = cases.iter().filter(|&&i| pop.carrier[i as usize]).count() as u64;
    let carrier_controls = controls.iter().filter(|&&i| pop.carrier[i as usize]).count() as u64;
    let counts = Counts2x2 {
        carrier_cases,
        carrier_controls,
        noncarrier_cases: n_cases as u64 - carrier_cases,
        noncarrier_controls: n_controls as u64 - carrier_controls,
    };
    let (estimate, se) = counts.odds_ratio();
    let mut ages = age_summary(pop, cases.iter().copied())
        .map(AgeDistributions::uniform)
        .unwrap_or_default();
    if control_ages == ControlAges::Sampled {
        if let Some(q) = age_summary(pop, controls.iter().copied()) {
            ages.controls_carrier = q;
            ages.controls_noncarrier = q;
        }
    }
    Ok(GeneratedRatio {
        report: ci_report(estimate, se),
        counts,
        ages,
    })
}

/// Cohort sample of carriers and non-carriers. Case age distributions
/// come from affected carriers and affected non-carriers respectively.
pub fn gen_rr_study<R: Rng + ?Sized>(
    pop: &Population,
    n_carriers: usize,
    n_noncarriers: usize,
    rng: &mut R,
) -> Result<GeneratedRatio> {
    let c1 = draw(rng, &pop.carriers, n_carriers, "carriers")?;
    let c0 = draw(rng, &pop.noncarriers, n_noncarriers, "non-carriers")?;
    let x1 = c1.iter().filter(|&&i| pop.affected[i as usize]).count() as u64;
    let x0 = c0.iter().filter(|&&i| pop.affected[i as usize]).count() as u64;
    let counts = Counts2x2 {
        carrier_cases: x1,
        carrier_controls: n_carriers as u64 - x1,
        noncarrier_cases: x0,
        noncarrier_controls: n_noncarriers as u64 - x0,
    };
    let (estimate, se) = counts.risk_ratio()?;
    let mut ages = AgeDistributions::default();
    if let Some(q) = age_summary(pop, c1.iter().copied().filter(|&i| pop.affected[i as usize])) {
        ages.cases_carrier = q;
        ages.controls_carrier = q;
    }
    if let Some(q) = age_summary(pop, c0.iter().copied().filter(|&i| pop.affected[i as usize])) {
        ages.cases_noncarrier = q;
        ages.controls_noncarrier = q;
    }
    Ok(GeneratedRatio {
        report: ci_report(estimate, se),
        counts,
        ages,
    })
}

/// Shift the estimate and interval by `exp(B)` with `B` drawn from `law`.
/// Returns the biased report and `B`.
pub fn inject_bias<R: Rng + ?Sized>(report: &RatioReport, law: &GammaLaw, rng: &mut R) -> (RatioReport, f64) {
    let b = law.sample(rng);
    (shift(report, b), b)
}

/// Multiply estimate and bounds by `exp(b)`; the log-scale width is unchanged.
pub fn shift(report: &RatioReport, b: f64) -> RatioReport {
    let f = b.exp();
    RatioReport {
        estimate: report.estimate * f,
        ci_low: report.ci_low.map(|x| x * f),
        ci_high: report.ci_high.map(|x| x * f),
        counts: report.counts,
    }
}

/// Bias law for a ratio modality.
pub fn bias_law(truth: &TruthSpec, modality: Modality) -> GammaLaw {
    match modality {
        Modality::Or => truth.or_bias_law,
        _ => truth.rr_bias_law,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::StudyRecord;

    fn small_truth() -> TruthSpec {
        TruthSpec {
            population: 200_000,
            ..TruthSpec::default()
        }
    }

    #[test]
    fn carrier_count_within_binomial_band() {
        let t = small_truth();
        let pop = gen_population(&t, 5).unwrap();
        let n = t.population as f64;
        let sd = (n * 0.01 * 0.99).sqrt();
        assert!((pop.n_carriers() as f64 - n * 0.01).abs() < 4.0 * sd);
        assert_eq!(pop.n_cases() + pop.n_controls(), pop.len());
    }

    #[test]
    fn population_is_reproducible() {
        let t = TruthSpec {
            population: 10_000,
            ..TruthSpec::default()
        };
        let a = gen_population(&t, 9).unwrap();
        let b = gen_population(&t, 9).unwrap();
        assert_eq!(a.age, b.age);
        assert_eq!(a.affected, b.affected);
    }

    #[test]
    fn or_study_direction_and_shape() {
        let pop = gen_population(&small_truth(), 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = gen_or_study(&pop, 2000, 2000, ControlAges::Cases, &mut rng).unwrap();
        assert!(g.report.estimate > 1.0);
        let c = g.counts;
        assert_eq!(c.carrier_cases + c.noncarrier_cases, 2000);
        let rec = StudyRecord {
            id: "x".into(),
            modality: Modality::Or,
            biased: false,
            sample_size: Some(4000),
            penetrance: None,
            ratio: Some(g.report.clone()),
            ages: g.ages,
            age_reported: true,
        };
        rec.validate().unwrap();
        assert_eq!(g.ages.controls_carrier, g.ages.cases_carrier);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = gen_or_study(&pop, 2000, 2000, ControlAges::Sampled, &mut rng).unwrap();
        assert_eq!(s.counts, g.counts);
        assert!(s.ages.controls_carrier.mean > s.ages.cases_carrier.mean);
        assert!(gen_or_study(&pop, pop.n_cases() + 1, 10, ControlAges::Cases, &mut rng).is_err());
    }

    #[test]
    fn rr_study_with_tiny_arms() {
        let pop = gen_population(&small_truth(), 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let g = gen_rr_study(&pop, 20, 20, &mut rng).unwrap();
            assert!(g.report.estimate > 0.0 && g.report.estimate.is_finite());
        }
    }

    #[test]
    fn bias_shift() {
        let r = ci_report(2.0, 0.3);
        assert_eq!(shift(&r, 0.0), r);
        let s = shift(&r, 0.5);
        assert!((s.estimate.ln() - 2f64.ln() - 0.5).abs() < 1e-12);
        let w0 = r.ci_high.unwrap().ln() - r.ci_low.unwrap().ln();
        let w1 = s.ci_high.unwrap().ln() - s.ci_low.unwrap().ln();
        assert!((w0 - w1).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (b, bias) = inject_bias(&r, &TruthSpec::default().or_bias_law, &mut rng);
        assert!(bias > 0.0 && b.estimate > r.estimate);
    }
}
