//! Expected OR and log RR implied by a carrier curve, and how study ages move them.

use penmeta::domain::{AgeDistributions, AgeSummary, BaselinePenetrance, WeibullCurve};
use penmeta::likelihood::{mean_log_rr, nu_or, QuadratureSpec};

fn main() -> penmeta::Result<()> {
    let base = BaselinePenetrance::default();
    let quad = QuadratureSpec::default();
    let default_ages = AgeDistributions::default();
    println!("{:>6} {:>7} {:>8} {:>8}", "kappa", "lambda", "OR", "RR");
    for (k, l) in [(3.65, 143.2426), (4.55, 95.25), (3.0, 110.0), (5.5, 85.0)] {
        let c = WeibullCurve::new(k, l)?;
        let nu = nu_or(&c, &base, &default_ages, &quad)?;
        let rr = mean_log_rr(&c, &base, &default_ages, &quad)?.exp();
        println!("{k:>6} {l:>7} {nu:>8.3} {rr:>8.3}");
    }

    let c = WeibullCurve::new(4.55, 95.25)?;
    println!("\ncase age mean -> OR (controls fixed at 63)");
    for m in [45.0, 55.0, 63.0, 70.0, 80.0] {
        let cases = AgeSummary::new(m, 12.0)?;
        let ages = AgeDistributions {
            cases_carrier: cases,
            cases_noncarrier: cases,
            ..AgeDistributions::default()
        };
        println!("{m:>5} {:>8.3}", nu_or(&c, &base, &ages, &quad)?);
    }
    Ok(())
}
