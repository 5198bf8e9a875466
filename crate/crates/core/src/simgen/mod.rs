//! Simulation study: synthetic study sets under known truth, fitted under
//! each approach and scored against the true mean penetrance curve.

mod design;
mod population;
mod run;
mod truth;

pub use design::{atm_template, ControlAges, SimDesign, TemplateStudy};
pub use population::{
    bias_law, gen_or_study, gen_population, gen_rr_study, inject_bias, shift, GeneratedRatio, Population,
};
pub use run::{
    aggregate, fit_replicate, gen_replicate, replicate_seed, run_sim, summarize, AgeEstimate, Replicate,
    ReplicateOutcome, SimModelConfig, SimReport, SimRow,
};
pub use truth::{true_penetrance_oracle, GammaLaw, NormalLaw, TruthSpec};
