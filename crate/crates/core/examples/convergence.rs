//! Gelman-Rubin for short and longer chains on the PALB2 data.

use penmeta::cli::{bundled, hyper_rhat, Dataset};
use penmeta::inference::{run_chains, Approach, MetaModel, Priors, RunConfig};
use penmeta::likelihood::{CovSimulation, QuadratureSpec};

fn main() -> penmeta::Result<()> {
    let file = bundled(Dataset::Palb2);
    let covs = file.penetrance_covs(&CovSimulation::default(), 1)?;
    let model = MetaModel::new(
        &file.studies,
        Approach::Adjust,
        Priors::default(),
        &file.baseline(),
        &QuadratureSpec::default(),
        &covs,
    )?;
    for iterations in [100, 1_000, 8_000] {
        let config = RunConfig {
            iterations,
            burn_in: iterations / 2,
            ..RunConfig::default()
        };
        let traces = run_chains(&model, &config)?;
        let r: Vec<String> = hyper_rhat(&traces)
            .into_iter()
            .map(|(k, v)| format!("{k}={}", v.map_or("-".into(), |x| format!("{x:.3}"))))
            .collect();
        println!("{iterations:>6} iterations: {}", r.join(" "));
    }
    Ok(())
}
