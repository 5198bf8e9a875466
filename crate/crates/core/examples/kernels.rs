//! Each proposal kernel run against its prior alone.

use penmeta::domain::Modality;
use penmeta::inference::{
    kappa_schedule, lambda_schedule, log_gamma_pdf, log_half_normal_pdf, mh_step, GammaProposal, HalfNormalProposal,
    Proposal,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn run<P: Proposal>(p: &P, start: f64, target: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut x, mut lx) = (start, target(start));
    let (mut sum, mut moves) = (0.0, 0);
    let n = 100_000;
    for _ in 0..n {
        if let Some(m) = mh_step(&mut rng, p, x, lx, |y| (target(y), ())) {
            x = m.value;
            lx = m.log_target;
            moves += 1;
        }
        sum += x;
    }
    (sum / n as f64, moves as f64 / n as f64)
}

fn main() {
    for m in [Modality::Penetrance, Modality::Rr, Modality::Or] {
        let (mean, acc) = run(&GammaProposal { schedule: kappa_schedule(m) }, 3.5, |x| log_gamma_pdf(x, 17.5, 0.2));
        println!("kappa  {m:<12?} mean {mean:.3} (3.500)  acceptance {acc:.2}");
        let (mean, acc) = run(&GammaProposal { schedule: lambda_schedule(m) }, 88.5, |x| log_gamma_pdf(x, 53.0, 1.67));
        println!("lambda {m:<12?} mean {mean:.2} (88.51)  acceptance {acc:.2}");
    }
    let (mean, acc) = run(&HalfNormalProposal::default(), 0.5, |x| log_half_normal_pdf(x, 0.9));
    println!("bias   sigma 0.9    mean {mean:.4} (0.7181) acceptance {acc:.2}");
}
