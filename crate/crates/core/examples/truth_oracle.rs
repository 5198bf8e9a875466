//! True population-average penetrance under the simulation laws.

use penmeta::simgen::{true_penetrance_oracle, TruthSpec};

fn main() -> penmeta::Result<()> {
    let ages: Vec<f64> = (2..=9).map(|d| 10.0 * d as f64).collect();
    let truth = TruthSpec::default();
    let p = true_penetrance_oracle(&truth, &ages, 1_000_000, 1)?;
    for (a, v) in ages.iter().zip(&p) {
        println!("{a:>4} {v:.4}");
    }
    println!("mean OR bias {:.3}, mean RR bias {:.3}", truth.or_bias_law.mean(), truth.rr_bias_law.mean());
    Ok(())
}
