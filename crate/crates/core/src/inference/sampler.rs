//! Metropolis-within-Gibbs sampler over study-level Weibull parameters,
//! bias terms and the four hyperparameters.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernels::{
    kappa_schedule, lambda_schedule, mh_step, GammaProposal, HalfNormalProposal, UniformWindow,
};
use super::priors::{
    log_gamma_pdf, log_half_normal_pdf, BiasPriorSpec, Hyper, HyperParam, HyperPriorBounds,
};
use crate::domain::{BaselinePenetrance, Modality, StudyRecord, WeibullCurve};
use crate::error::{Error, Result};
use crate::likelihood::{PenetranceCov, QuadratureSpec, StudyModel, StudyParams};
use crate::seeds::derive_seed;

/// How biased studies enter the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    /// Include biased studies and estimate their bias terms.
    Adjust,
    /// Include biased studies as if unbiased (bias fixed at zero).
    NoAdjust,
    /// Drop biased studies.
    Exclude,
}

impl Approach {
    pub const ALL: [Approach; 3] = [Approach::Adjust, Approach::NoAdjust, Approach::Exclude];

    pub fn bias_adjust(self) -> bool {
        self == Approach::Adjust
    }

    pub fn exclude_biased(self) -> bool {
        self == Approach::Exclude
    }

    /// 1, 2 or 3.
    pub fn number(self) -> u8 {
        match self {
            Approach::Adjust => 1,
            Approach::NoAdjust => 2,
            Approach::Exclude => 3,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Approach::Adjust),
            2 => Some(Approach::NoAdjust),
            3 => Some(Approach::Exclude),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Approach::Adjust => "adjust",
            Approach::NoAdjust => "noadjust",
            Approach::Exclude => "exclude",
        }
    }
}

impl std::str::FromStr for Approach {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adjust" | "1" => Ok(Approach::Adjust),
            "noadjust" | "2" => Ok(Approach::NoAdjust),
            "exclude" | "3" => Ok(Approach::Exclude),
            other => Err(Error::Parse(format!(
                "unknown approach `{other}` (expected adjust, noadjust or exclude)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub chains: usize,
    pub seed: u64,
    pub thin: usize,
    pub approach: Approach,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            iterations: 30_000,
            burn_in: 15_000,
            chains: 4,
            seed: 20_240_510,
            thin: 1,
            approach: Approach::Adjust,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.chains == 0 || self.thin == 0 {
            return Err(Error::Contract("iterations, chains and thin must be positive".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::Contract(format!(
                "burn-in {} must be below the iteration count {}",
                self.burn_in, self.iterations
            )));
        }
        Ok(())
    }

    pub fn kept_draws(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.thin)
    }
}

/// Prior settings shared by every chain.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Priors {
    pub bounds: HyperPriorBounds,
    pub bias: BiasPriorSpec,
}

#[derive(Debug, Clone)]
struct ModelStudy {
    id: String,
    modality: Modality,
    /// Bias term is sampled for this study.
    adjusted: bool,
    bias_sigma: f64,
    likelihood: StudyModel,
}

/// A study set prepared for sampling under one approach. Studies are held in id order.
#[derive(Debug, Clone)]
pub struct MetaModel {
    studies: Vec<ModelStudy>,
    priors: Priors,
}

impl MetaModel {
    pub fn new(
        records: &[StudyRecord],
        approach: Approach,
        priors: Priors,
        baseline: &BaselinePenetrance,
        quad: &QuadratureSpec,
        covs: &BTreeMap<String, PenetranceCov>,
    ) -> Result<Self> {
        priors.bounds.validate()?;
        priors.bias.validate()?;
        baseline.validate()?;
        let grid = Arc::new(quad.grid()?);
        let mut sorted: Vec<&StudyRecord> = records
            .iter()
            .filter(|r| !(approach.exclude_biased() && r.biased))
            .collect();
        sorted.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = sorted.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::Contract(format!("duplicate study id `{}`", w[0].id)));
        }
        let studies = sorted
            .into_iter()
            .map(|r| {
                Ok(ModelStudy {
                    id: r.id.clone(),
                    modality: r.modality,
                    adjusted: r.biased && approach.bias_adjust(),
                    bias_sigma: priors.bias.sigma_for(r.modality),
                    likelihood: StudyModel::build(r, baseline, grid.clone(), covs.get(&r.id))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { studies, priors })
    }

    pub fn len(&self) -> usize {
        self.studies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.studies.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.studies.iter().map(|s| s.id.clone()).collect()
    }

    pub fn modalities(&self) -> Vec<Modality> {
        self.studies.iter().map(|s| s.modality).collect()
    }

    pub fn adjusted(&self) -> Vec<bool> {
        self.studies.iter().map(|s| s.adjusted).collect()
    }

    pub fn priors(&self) -> &Priors {
        &self.priors
    }
}

/// All sampled quantities at one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub studies: Vec<StudyParams>,
    pub hyper: Hyper,
    pub iteration: usize,
}

#[derive(Debug, Clone, Default)]
struct StudyCache {
    /// Bias-free log mean for ratio studies; unused for penetrance studies.
    log_mean: f64,
    loglik: f64,
    /// Grid powers `t^kappa` for ratio studies at the current shape.
    pow: Vec<f64>,
}

/// Acceptance counts per kernel.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Acceptance {
    pub proposals: usize,
    pub kappa: Vec<usize>,
    pub lambda: Vec<usize>,
    pub bias: Vec<usize>,
    pub hyper: [usize; 4],
}

impl Acceptance {
    fn new(n: usize) -> Self {
        Self {
            proposals: 0,
            kappa: vec![0; n],
            lambda: vec![0; n],
            bias: vec![0; n],
            hyper: [0; 4],
        }
    }

    fn rate(&self, count: usize) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            count as f64 / self.proposals as f64
        }
    }

    pub fn hyper_rates(&self) -> [f64; 4] {
        self.hyper.map(|c| self.rate(c))
    }

    pub fn kappa_rates(&self) -> Vec<f64> {
        self.kappa.iter().map(|&c| self.rate(c)).collect()
    }

    pub fn lambda_rates(&self) -> Vec<f64> {
        self.lambda.iter().map(|&c| self.rate(c)).collect()
    }

    pub fn bias_rates(&self) -> Vec<f64> {
        self.bias.iter().map(|&c| self.rate(c)).collect()
    }
}

/// Full evaluation after a shape change.
fn evaluate(model: &MetaModel, i: usize, curve: &WeibullCurve, bias: f64) -> StudyCache {
    match &model.studies[i].likelihood {
        StudyModel::Ratio(m) => {
            let pow = m.powers(curve.kappa);
            let log_mean = m.log_mean_pow(&pow, curve);
            StudyCache {
                log_mean,
                loglik: m.loglik_at(log_mean, bias),
                pow,
            }
        }
        StudyModel::Penetrance(m) => StudyCache {
            log_mean: f64::NAN,
            loglik: m.loglik(curve),
            pow: Vec::new(),
        },
    }
}

/// `(log_mean, loglik)` after a scale change, reusing the cached powers.
fn evaluate_scale(model: &MetaModel, i: usize, pow: &[f64], curve: &WeibullCurve, bias: f64) -> (f64, f64) {
    match &model.studies[i].likelihood {
        StudyModel::Ratio(m) => {
            let log_mean = m.log_mean_pow(pow, curve);
            (log_mean, m.loglik_at(log_mean, bias))
        }
        StudyModel::Penetrance(m) => (f64::NAN, m.loglik(curve)),
    }
}

/// Single-chain Metropolis-within-Gibbs driver with cached per-study likelihoods.
pub struct Sampler<'m> {
    model: &'m MetaModel,
    cache: Vec<StudyCache>,
    rng: ChaCha8Rng,
    pub acceptance: Acceptance,
}

impl<'m> Sampler<'m> {
    pub fn new(model: &'m MetaModel, seed: u64) -> Self {
        Self {
            model,
            cache: vec![StudyCache::default(); model.len()],
            rng: ChaCha8Rng::seed_from_u64(seed),
            acceptance: Acceptance::new(model.len()),
        }
    }

    /// Initial state: hyperparameters at prior midpoints, study curves at
    /// the implied Gamma means, bias terms at the half-normal mean. Studies
    /// with a non-finite likelihood there are re-drawn from the prior.
    pub fn initialize(&mut self) -> Result<ChainState> {
        let hyper = self.model.priors.bounds.midpoint();
        let mut studies = Vec::with_capacity(self.model.len());
        for (i, s) in self.model.studies.iter().enumerate() {
            let bias = s
                .adjusted
                .then(|| s.bias_sigma * (2.0 / std::f64::consts::PI).sqrt());
            let mut curve = WeibullCurve {
                kappa: hyper.kappa(),
                lambda: hyper.lambda(),
            };
            let mut cache = evaluate(self.model, i, &curve, bias.unwrap_or(0.0));
            let mut tries = 0;
            while !cache.loglik.is_finite() {
                tries += 1;
                if tries > 100 {
                    return Err(Error::Sampler(format!(
                        "study `{}` has no finite likelihood near the prior",
                        s.id
                    )));
                }
                curve = WeibullCurve {
                    kappa: Gamma::new(hyper.a, hyper.b).unwrap().sample(&mut self.rng),
                    lambda: Gamma::new(hyper.c, hyper.d).unwrap().sample(&mut self.rng),
                };
                cache = evaluate(self.model, i, &curve, bias.unwrap_or(0.0));
            }
            self.cache[i] = cache;
            studies.push(StudyParams { curve, bias });
        }
        Ok(ChainState {
            studies,
            hyper,
            iteration: 0,
        })
    }

    /// Recompute cached likelihoods from a state (e.g. one built by hand).
    pub fn sync(&mut self, state: &ChainState) -> Result<()> {
        if state.studies.len() != self.model.len() {
            return Err(Error::Contract("state does not match the model's study count".into()));
        }
        for (i, p) in state.studies.iter().enumerate() {
            self.cache[i] = evaluate(self.model, i, &p.curve, p.bias.unwrap_or(0.0));
        }
        Ok(())
    }

    pub fn update_kappa(&mut self, state: &mut ChainState, i: usize) -> bool {
        let p = state.studies[i];
        let (a, b) = (state.hyper.a, state.hyper.b);
        let proposal = GammaProposal {
            schedule: kappa_schedule(self.model.studies[i].modality),
        };
        let current = self.cache[i].loglik + log_gamma_pdf(p.curve.kappa, a, b);
        let bias = p.bias.unwrap_or(0.0);
        let model = self.model;
        let mv = mh_step(&mut self.rng, &proposal, p.curve.kappa, current, |k| {
            let curve = WeibullCurve { kappa: k, lambda: p.curve.lambda };
            let c = evaluate(model, i, &curve, bias);
            (c.loglik + log_gamma_pdf(k, a, b), c)
        });
        match mv {
            Some(m) => {
                state.studies[i].curve.kappa = m.value;
                self.cache[i] = m.extra;
                self.acceptance.kappa[i] += 1;
                true
            }
            None => false,
        }
    }

    pub fn update_lambda(&mut self, state: &mut ChainState, i: usize) -> bool {
        let p = state.studies[i];
        let (c, d) = (state.hyper.c, state.hyper.d);
        let proposal = GammaProposal {
            schedule: lambda_schedule(self.model.studies[i].modality),
        };
        let current = self.cache[i].loglik + log_gamma_pdf(p.curve.lambda, c, d);
        let bias = p.bias.unwrap_or(0.0);
        let model = self.model;
        let pow = &self.cache[i].pow;
        let mv = mh_step(&mut self.rng, &proposal, p.curve.lambda, current, |l| {
            let curve = WeibullCurve { kappa: p.curve.kappa, lambda: l };
            let e = evaluate_scale(model, i, pow, &curve, bias);
            (e.1 + log_gamma_pdf(l, c, d), e)
        });
        match mv {
            Some(m) => {
                state.studies[i].curve.lambda = m.value;
                (self.cache[i].log_mean, self.cache[i].loglik) = m.extra;
                self.acceptance.lambda[i] += 1;
                true
            }
            None => false,
        }
    }

    /// Bias update for an adjusted study; a no-op (returning false) otherwise.
    pub fn update_bias(&mut self, state: &mut ChainState, i: usize) -> bool {
        let s = &self.model.studies[i];
        let (Some(bias), StudyModel::Ratio(m)) = (state.studies[i].bias, &s.likelihood) else {
            return false;
        };
        if !s.adjusted {
            return false;
        }
        let sigma = s.bias_sigma;
        let log_mean = self.cache[i].log_mean;
        let current = self.cache[i].loglik + log_half_normal_pdf(bias, sigma);
        let mv = mh_step(&mut self.rng, &HalfNormalProposal::default(), bias, current, |b| {
            let ll = m.loglik_at(log_mean, b);
            (ll + log_half_normal_pdf(b, sigma), ll)
        });
        match mv {
            Some(mv) => {
                state.studies[i].bias = Some(mv.value);
                self.cache[i].loglik = mv.extra;
                self.acceptance.bias[i] += 1;
                true
            }
            None => false,
        }
    }

    pub fn update_hyper(&mut self, state: &mut ChainState, which: HyperParam) -> bool {
        let support = self.model.priors.bounds.get(which);
        let proposal = UniformWindow {
            half_width: which.step(),
            support,
        };
        let hyper = state.hyper;
        let studies = &state.studies;
        let target = |v: f64| -> f64 {
            let mut h = hyper;
            h.set(which, v);
            let shape_side = matches!(which, HyperParam::A | HyperParam::B);
            studies
                .iter()
                .map(|p| {
                    if shape_side {
                        log_gamma_pdf(p.curve.kappa, h.a, h.b)
                    } else {
                        log_gamma_pdf(p.curve.lambda, h.c, h.d)
                    }
                })
                .sum()
        };
        let current = target(hyper.get(which));
        let mv = mh_step(&mut self.rng, &proposal, hyper.get(which), current, |v| (target(v), ()));
        match mv {
            Some(m) => {
                state.hyper.set(which, m.value);
                self.acceptance.hyper[which as usize] += 1;
                true
            }
            None => false,
        }
    }

    /// One full sweep: per study kappa, lambda, bias; then a, b, c, d.
    pub fn sweep(&mut self, state: &mut ChainState) {
        for i in 0..self.model.len() {
            self.update_kappa(state, i);
            self.update_lambda(state, i);
            self.update_bias(state, i);
        }
        for p in HyperParam::ALL {
            self.update_hyper(state, p);
        }
        self.acceptance.proposals += 1;
        state.iteration += 1;
    }
}

/// Post-burn-in draws of one chain. Per-study columns follow `ids`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace {
    pub ids: Vec<String>,
    pub adjusted: Vec<bool>,
    pub iterations: Vec<usize>,
    pub hyper: Vec<Hyper>,
    pub kappa: Vec<Vec<f64>>,
    pub lambda: Vec<Vec<f64>>,
    /// Only adjusted studies carry a bias column.
    pub bias: Vec<Vec<f64>>,
    pub acceptance: Acceptance,
}

impl ChainTrace {
    pub fn len(&self) -> usize {
        self.hyper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hyper.is_empty()
    }

    pub fn hyper_column(&self, p: HyperParam) -> Vec<f64> {
        self.hyper.iter().map(|h| h.get(p)).collect()
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut cols: Vec<String> = ["iteration", "a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        cols.extend(self.ids.iter().map(|id| format!("kappa_{id}")));
        cols.extend(self.ids.iter().map(|id| format!("lambda_{id}")));
        cols.extend(
            self.ids
                .iter()
                .zip(&self.adjusted)
                .filter(|(_, &a)| a)
                .map(|(id, _)| format!("bias_{id}")),
        );
        cols
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.csv_header().join(","))?;
        for t in 0..self.len() {
            let h = &self.hyper[t];
            write!(w, "{},{},{},{},{}", self.iterations[t], h.a, h.b, h.c, h.d)?;
            for v in self.kappa[t].iter().chain(&self.lambda[t]).chain(&self.bias[t]) {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Run one chain. Equal seeds give bit-identical traces.
pub fn run_chain(model: &MetaModel, config: &RunConfig, chain_seed: u64) -> Result<ChainTrace> {
    config.validate()?;
    let mut sampler = Sampler::new(model, chain_seed);
    let mut state = sampler.initialize()?;
    let adjusted = model.adjusted();
    let keep = config.kept_draws();
    let mut trace = ChainTrace {
        ids: model.ids(),
        adjusted: adjusted.clone(),
        iterations: Vec::with_capacity(keep),
        hyper: Vec::with_capacity(keep),
        kappa: Vec::with_capacity(keep),
        lambda: Vec::with_capacity(keep),
        bias: Vec::with_capacity(keep),
        acceptance: Acceptance::default(),
    };
    for t in 0..config.iterations {
        sampler.sweep(&mut state);
        if t >= config.burn_in && (t - config.burn_in) % config.thin == 0 {
            trace.iterations.push(t + 1);
            trace.hyper.push(state.hyper);
            trace.kappa.push(state.studies.iter().map(|p| p.curve.kappa).collect());
            trace.lambda.push(state.studies.iter().map(|p| p.curve.lambda).collect());
            trace.bias.push(
                state
                    .studies
                    .iter()
                    .zip(&adjusted)
                    .filter(|(_, &a)| a)
                    .map(|(p, _)| p.bias.expect("adjusted studies carry a bias"))
                    .collect(),
            );
        }
    }
    trace.acceptance = sampler.acceptance;
    Ok(trace)
}

/// Seed of chain `k` under a master seed.
pub fn chain_seed(master: u64, chain: usize) -> u64 {
    derive_seed(master, 0x6368_6169_6e00 + chain as u64)
}

/// Run `config.chains` chains concurrently; results are in chain order.
pub fn run_chains(model: &MetaModel, config: &RunConfig) -> Result<Vec<ChainTrace>> {
    config.validate()?;
    (0..config.chains)
        .into_par_iter()
        .map(|k| run_chain(model, config, chain_seed(config.seed, k)))
        .collect()
}
