//! Fit the meta-analysis to a bundled dataset.
//!
//!     cargo run --example fit_bundled -- palb2 4000
//!
//! Arguments: dataset (`atm` or `palb2`) and iterations per chain.

use penmeta::cli::{analyze, bundled, Dataset};
use penmeta::inference::{Approach, Priors, RunConfig};

fn main() -> penmeta::Result<()> {
    let mut args = std::env::args().skip(1);
    let dataset = match args.next().as_deref() {
        Some("atm") => Dataset::Atm,
        _ => Dataset::Palb2,
    };
    let iterations: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(4_000);
    let file = bundled(dataset);

    for approach in Approach::ALL {
        let config = RunConfig {
            iterations,
            burn_in: iterations / 2,
            approach,
            ..RunConfig::default()
        };
        let fit = analyze(&file, &config, Priors::default())?;
        println!("{:?}, {} studies", approach, fit.traces[0].ids.len());
        for (j, age) in fit.decades.ages.iter().enumerate() {
            println!(
                "  age {age}: {:.3} ({:.3} - {:.3})",
                fit.decades.mean[j], fit.decades.cri_low[j], fit.decades.cri_high[j]
            );
        }
        let rhat: Vec<String> = fit
            .rhat
            .iter()
            .map(|(k, v)| format!("{k}={}", v.map_or("-".into(), |x| format!("{x:.3}"))))
            .collect();
        println!("  rhat {}", rhat.join(" "));
    }
    Ok(())
}
