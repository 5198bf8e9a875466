use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::design::{SimDesign, TemplateStudy};
use super::population::{bias_law, gen_or_study, gen_population, gen_rr_study, inject_bias, Population};
use super::truth::{true_penetrance_oracle, TruthSpec};
use crate::domain::{AgeDistributions, BaselinePenetrance, Modality, StudyRecord};
use crate::error::{Error, Result};
use crate::inference::{run_chains, Approach, MetaModel, Priors, RunConfig};
use crate::likelihood::{build_penetrance_cov, CovSimulation, PenetranceCov, QuadratureSpec};
use crate::posterior::{posterior_curve, DECADE_AGES};
use crate::seeds::derive_seed;
use crate::survival::simulated_report;

/// Sampler and evaluation settings shared by every replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct SimModelConfig {
    /// `seed` and `approach` are overridden per replicate and approach.
    pub run: RunConfig,
    pub priors: Priors,
    pub baseline: BaselinePenetrance,
    pub quad: QuadratureSpec,
    pub cov_sim: CovSimulation,
    pub level: f64,
    pub oracle_draws: usize,
    pub oracle_seed: u64,
    /// KM regeneration budget for synthetic penetrance studies.
    pub max_km_tries: usize,
}

impl Default for SimModelConfig {
    fn default() -> Self {
        Self {
            run: RunConfig {
                iterations: 10_000,
                burn_in: 5_000,
                chains: 2,
                ..RunConfig::default()
            },
            priors: Priors::default(),
            baseline: BaselinePenetrance::default(),
            quad: QuadratureSpec::default(),
            cov_sim: CovSimulation::default(),
            level: 0.95,
            oracle_draws: 1_000_000,
            oracle_seed: 1,
            max_km_tries: 100,
        }
    }
}

/// Inputs of one simulated meta-analysis.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub records: Vec<StudyRecord>,
    pub covs: BTreeMap<String, PenetranceCov>,
    /// Injected bias per biased study.
    pub true_bias: BTreeMap<String, f64>,
}

pub fn replicate_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, index as u64)
}

fn split(n: u64) -> (usize, usize) {
    let first = n.div_ceil(2);
    (first as usize, (n - first) as usize)
}

fn gen_study(
    slot: &TemplateStudy,
    k: usize,
    design: &SimDesign,
    pop: &Population,
    truth: &TruthSpec,
    model: &SimModelConfig,
    seed: u64,
) -> Result<(StudyRecord, Option<PenetranceCov>, Option<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 100 + k as u64));
    let age_reported = design.scenario == 1 && slot.age_reported;
    let mut record = StudyRecord {
        id: slot.id.clone(),
        modality: slot.modality,
        biased: slot.biased,
        sample_size: Some(slot.sample_size),
        penetrance: None,
        ratio: None,
        ages: AgeDistributions::default(),
        age_reported,
    };
    if slot.modality == Modality::Penetrance {
        let curve = truth.draw_curve(&mut rng);
        let report = simulated_report(
            &curve,
            slot.sample_size as usize,
            &truth.censoring,
            &DECADE_AGES,
            model.max_km_tries,
            &mut rng,
        )?;
        let cov = build_penetrance_cov(&report, slot.sample_size, &model.cov_sim, derive_seed(seed, 200 + k as u64))?;
        record.penetrance = Some(report);
        return Ok((record, Some(cov), None));
    }
    let (n1, n0) = split(slot.sample_size);
    let generated = if slot.modality == Modality::Or {
        gen_or_study(pop, n1, n0, design.control_ages, &mut rng)?
    } else {
        gen_rr_study(pop, n1, n0, &mut rng)?
    };
    if age_reported {
        record.ages = generated.ages;
    }
    let (report, bias) = if slot.biased {
        let (r, b) = inject_bias(&generated.report, &bias_law(truth, slot.modality), &mut rng);
        (r, Some(b))
    } else {
        (generated.report, None)
    };
    record.ratio = Some(report);
    Ok((record, None, bias))
}

/// Generate the studies of replicate `index`. Depends only on
/// `(design.seed, index)` and the template.
pub fn gen_replicate(design: &SimDesign, truth: &TruthSpec, model: &SimModelConfig, index: usize) -> Result<Replicate> {
    let seed = replicate_seed(design.seed, index);
    let pop = gen_population(truth, derive_seed(seed, 1))?;
    let mut rep = Replicate {
        records: Vec::with_capacity(design.template.len()),
        covs: BTreeMap::new(),
        true_bias: BTreeMap::new(),
    };
    for (k, slot) in design.template.iter().enumerate() {
        let (record, cov, bias) = gen_study(slot, k, design, &pop, truth, model, seed)?;
        if let Some(c) = cov {
            rep.covs.insert(record.id.clone(), c);
        }
        if let Some(b) = bias {
            rep.true_bias.insert(record.id.clone(), b);
        }
        record.validate()?;
        rep.records.push(record);
    }
    Ok(rep)
}

/// Posterior mean and interval at each evaluation age.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgeEstimate {
    pub mean: f64,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub index: usize,
    /// Per approach, one estimate per age. Empty when the replicate failed.
    pub estimates: BTreeMap<Approach, Vec<AgeEstimate>>,
    pub error: Option<String>,
}

/// Fit one approach to a replicate.
pub fn fit_replicate(
    rep: &Replicate,
    approach: Approach,
    model: &SimModelConfig,
    seed: u64,
    ages: &[f64],
) -> Result<Vec<AgeEstimate>> {
    let meta = MetaModel::new(&rep.records, approach, model.priors, &model.baseline, &model.quad, &rep.covs)?;
    let cfg = RunConfig {
        seed: derive_seed(seed, 10 + approach.number() as u64),
        approach,
        ..model.run
    };
    let traces = run_chains(&meta, &cfg)?;
    let curve = posterior_curve(&traces, ages, model.level)?;
    Ok((0..ages.len())
        .map(|j| AgeEstimate {
            mean: curve.mean[j],
            low: curve.cri_low[j],
            high: curve.cri_high[j],
        })
        .collect())
}

fn run_replicate(design: &SimDesign, truth: &TruthSpec, model: &SimModelConfig, index: usize) -> ReplicateOutcome {
    let seed = replicate_seed(design.seed, index);
    let result = gen_replicate(design, truth, model, index).and_then(|rep| {
        design
            .approaches
            .iter()
            .map(|&a| Ok((a, fit_replicate(&rep, a, model, seed, &DECADE_AGES)?)))
            .collect::<Result<BTreeMap<_, _>>>()
    });
    match result {
        Ok(estimates) => ReplicateOutcome {
            index,
            estimates,
            error: None,
        },
        Err(e) => ReplicateOutcome {
            index,
            estimates: BTreeMap::new(),
            error: Some(e.to_string()),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub setting: u8,
    pub scenario: u8,
    pub approach: Approach,
    pub age: f64,
    pub truth: f64,
    pub mean_estimate: f64,
    pub rmse_over_true: f64,
    pub coverage: f64,
    pub n_replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub setting: u8,
    pub scenario: u8,
    pub truth: Vec<f64>,
    pub rows: Vec<SimRow>,
    pub failures: usize,
    pub outcomes: Vec<ReplicateOutcome>,
}

impl SimReport {
    pub fn row(&self, approach: Approach, age: f64) -> Option<&SimRow> {
        self.rows.iter().find(|r| r.approach == approach && r.age == age)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "setting,scenario,approach,age,true,mean_estimate,rmse_over_true,coverage,n_replicates"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{}",
                r.setting,
                r.scenario,
                r.approach.number(),
                r.age,
                r.truth,
                r.mean_estimate,
                r.rmse_over_true,
                r.coverage,
                r.n_replicates
            )?;
        }
        Ok(())
    }

    /// One line per replicate, approach and age.
    pub fn write_replicates_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "replicate,approach,age,mean,cri_low,cri_high")?;
        for o in &self.outcomes {
            for (a, est) in &o.estimates {
                for (age, e) in DECADE_AGES.iter().zip(est) {
                    writeln!(
                        w,
                        "{},{},{},{:.10},{:.10},{:.10}",
                        o.index,
                        a.number(),
                        age,
                        e.mean,
                        e.low,
                        e.high
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Mean estimate, RMSE relative to the truth, and interval coverage over replicates.
pub fn summarize(estimates: &[AgeEstimate], truth: f64) -> (f64, f64, f64) {
    let n = estimates.len() as f64;
    let mean = estimates.iter().map(|e| e.mean).sum::<f64>() / n;
    let mse = estimates.iter().map(|e| (e.mean - truth).powi(2)).sum::<f64>() / n;
    let cover = estimates.iter().filter(|e| e.low <= truth && truth <= e.high).count() as f64 / n;
    (mean, mse.sqrt() / truth, cover)
}

/// Aggregate replicate outcomes into per-approach, per-age rows.
pub fn aggregate(design: &SimDesign, truth: &[f64], outcomes: Vec<ReplicateOutcome>) -> Result<SimReport> {
    let failures = outcomes.iter().filter(|o| o.error.is_some()).count();
    if failures as f64 > 0.02 * outcomes.len() as f64 {
        let first = outcomes.iter().find_map(|o| o.error.clone()).unwrap_or_default();
        return Err(Error::Sampler(format!(
            "{failures} of {} replicates failed (first: {first})",
            outcomes.len()
        )));
    }
    let mut rows = Vec::new();
    for &a in &design.approaches {
        for (j, (&age, &t)) in DECADE_AGES.iter().zip(truth).enumerate() {
            let est: Vec<AgeEstimate> = outcomes
                .iter()
                .filter_map(|o| o.estimates.get(&a).map(|v| v[j]))
                .collect();
            let (mean_estimate, rmse_over_true, coverage) = summarize(&est, t);
            rows.push(SimRow {
                setting: design.setting,
                scenario: design.scenario,
                approach: a,
                age,
                truth: t,
                mean_estimate,
                rmse_over_true,
                coverage,
                n_replicates: est.len(),
            });
        }
    }
    Ok(SimReport {
        setting: design.setting,
        scenario: design.scenario,
        truth: truth.to_vec(),
        rows,
        failures,
        outcomes,
    })
}

/// Run every replicate (concurrently) and aggregate in replicate order.
pub fn run_sim(design: &SimDesign, truth: &TruthSpec, model: &SimModelConfig) -> Result<SimReport> {
    design.validate()?;
    truth.validate()?;
    model.run.validate()?;
    let truth_values = true_penetrance_oracle(truth, &DECADE_AGES, model.oracle_draws, model.oracle_seed)?;
    let outcomes: Vec<ReplicateOutcome> = (0..design.replicates)
        .into_par_iter()
        .map(|i| run_replicate(design, truth, model, i))
        .collect();
    aggregate(design, &truth_values, outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(mean: f64, low: f64, high: f64) -> AgeEstimate {
        AgeEstimate { mean, low, high }
    }

    #[test]
    fn three_replicate_fixture() {
        // truth 0.4; estimates 0.38, 0.44, 0.40
        let e = [est(0.38, 0.30, 0.45), est(0.44, 0.41, 0.50), est(0.40, 0.0, 1.0)];
        let (m, r, c) = summarize(&e, 0.4);
        assert!((m - 0.406_666_666_666_666_7).abs() < 1e-12);
        // sqrt((0.0004 + 0.0016 + 0) / 3) / 0.4
        assert!((r - (0.002f64 / 3.0).sqrt() / 0.4).abs() < 1e-12);
        assert!((c - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn full_interval_always_covers() {
        let e = vec![est(0.2, 0.0, 1.0); 7];
        assert_eq!(summarize(&e, 0.33).2, 1.0);
    }

    fn tiny_setup() -> (SimDesign, TruthSpec, SimModelConfig) {
        let design = SimDesign::new(1, 1, 2, 42).unwrap();
        let truth = TruthSpec {
            population: 700_000,
            ..TruthSpec::default()
        };
        let model = SimModelConfig {
            run: RunConfig {
                iterations: 60,
                burn_in: 30,
                chains: 2,
                ..RunConfig::default()
            },
            cov_sim: CovSimulation {
                sims: 50,
                ..CovSimulation::default()
            },
            oracle_draws: 10_000,
            ..SimModelConfig::default()
        };
        (design, truth, model)
    }

    #[test]
    fn replicate_generation_is_reproducible() {
        let (design, truth, model) = tiny_setup();
        let a = gen_replicate(&design, &truth, &model, 1).unwrap();
        let b = gen_replicate(&design, &truth, &model, 1).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.true_bias, b.true_bias);
        assert_eq!(a.true_bias.len(), 10);
        assert_eq!(a.covs.len(), 2);
        // Scenario 2 carries only default age summaries.
        let mut d2 = design.clone();
        d2.scenario = 2;
        let c = gen_replicate(&d2, &truth, &model, 1).unwrap();
        assert!(c.records.iter().all(|r| r.ages == AgeDistributions::default() && !r.age_reported));
        assert!(a.records.iter().any(|r| r.ages != AgeDistributions::default()));
    }

    #[test]
    fn exclude_equals_adjust_without_biased_studies() {
        let (design, truth, model) = tiny_setup();
        let rep = gen_replicate(&design, &truth, &model, 0).unwrap();
        let excl = fit_replicate(&rep, Approach::Exclude, &model, 5, &DECADE_AGES).unwrap();
        let trimmed = Replicate {
            records: rep.records.iter().filter(|r| !r.biased).cloned().collect(),
            covs: rep.covs.clone(),
            true_bias: BTreeMap::new(),
        };
        // Same chain seeds: feed the exclude seed to the adjust fit.
        let meta = MetaModel::new(&trimmed.records, Approach::Adjust, model.priors, &model.baseline, &model.quad, &trimmed.covs)
            .unwrap();
        let cfg = RunConfig {
            seed: derive_seed(5, 13),
            approach: Approach::Adjust,
            ..model.run
        };
        let curve = posterior_curve(&run_chains(&meta, &cfg).unwrap(), &DECADE_AGES, 0.95).unwrap();
        for j in 0..5 {
            assert_eq!(excl[j].mean, curve.mean[j]);
        }
    }

    #[test]
    fn end_to_end_small() {
        let (design, truth, model) = tiny_setup();
        let r = run_sim(&design, &truth, &model).unwrap();
        assert_eq!(r.rows.len(), 15);
        assert_eq!(r.failures, 0);
        assert!(r.rows.iter().all(|x| x.n_replicates == 2));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let again = run_sim(&design, &truth, &model).unwrap();
        let mut buf2 = Vec::new();
        again.write_csv(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }
}
