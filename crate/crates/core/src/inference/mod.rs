//! Priors, proposal kernels, the Gibbs sampler and convergence diagnostics.

mod diagnostics;
mod kernels;
mod priors;
mod sampler;

pub use diagnostics::gelman_rubin;
pub use kernels::{
    kappa_schedule, lambda_schedule, mh_step, GammaProposal, HalfNormalProposal, Move, Proposal,
    UniformWindow, VarianceSchedule,
};
pub use priors::{
    log_gamma_pdf, log_half_normal_pdf, log_prior, BiasPriorSpec, Hyper, HyperParam,
    HyperPriorBounds, Interval,
};
pub use sampler::{
    chain_seed, run_chain, run_chains, Acceptance, Approach, ChainState, ChainTrace, MetaModel,
    Priors, RunConfig, Sampler,
};
