//! Simulated cohort -> Kaplan-Meier penetrance report -> covariance -> log-likelihood.

use penmeta::domain::WeibullCurve;
use penmeta::likelihood::{build_penetrance_cov, CovSimulation, PenetranceModel};
use penmeta::survival::{simulate_cohort, Censoring, KaplanMeier};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> penmeta::Result<()> {
    let truth = WeibullCurve::new(4.55, 95.25)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let obs = simulate_cohort(&truth, 1_000, &Censoring::default(), &mut rng);
    let km = KaplanMeier::fit(&obs);
    let ages = [40.0, 50.0, 60.0, 70.0, 80.0];
    let report = km.report(&ages, 1.959964).expect("events before 80");
    println!("age   truth     KM   (95% CI)");
    for (j, &a) in ages.iter().enumerate() {
        println!(
            "{a:>3} {:>7.3} {:>6.3}  ({:.3}, {:.3})",
            truth.cdf(a)?,
            report.values[j],
            report.ci_low[j],
            report.ci_high[j]
        );
    }

    let cov = build_penetrance_cov(&report, 1_000, &CovSimulation::default(), 12)?;
    println!("\nlogit-scale correlation:\n{:.2}", cov.correlation());
    let model = PenetranceModel::new(&report, &cov)?;
    for (k, l) in [(4.55, 95.25), (3.0, 95.25), (4.55, 120.0)] {
        println!("loglik at ({k}, {l}): {:.3}", model.loglik(&WeibullCurve::new(k, l)?));
    }
    Ok(())
}
