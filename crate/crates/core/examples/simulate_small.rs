//! A scaled-down simulation study: few replicates, short chains, smaller population.
//!
//!     cargo run --example simulate_small -- 4

use penmeta::inference::RunConfig;
use penmeta::simgen::{run_sim, SimDesign, SimModelConfig, TruthSpec};

fn main() -> penmeta::Result<()> {
    let reps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let design = SimDesign::new(1, 1, reps, 7)?;
    let truth = TruthSpec {
        population: 700_000,
        ..TruthSpec::default()
    };
    let model = SimModelConfig {
        run: RunConfig {
            iterations: 1_500,
            burn_in: 750,
            chains: 2,
            ..RunConfig::default()
        },
        oracle_draws: 200_000,
        ..SimModelConfig::default()
    };
    let report = run_sim(&design, &truth, &model)?;
    report.write_csv(std::io::stdout().lock())?;
    Ok(())
}
