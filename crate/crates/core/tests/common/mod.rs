#![allow(dead_code)]

use penmeta::domain::{AgeDistributions, AgeSummary, Modality, RatioReport, StudyRecord, WeibullCurve};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn pdf(c: &WeibullCurve, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let z = t / c.lambda;
    c.kappa / c.lambda * z.powf(c.kappa - 1.0) * (-z.powf(c.kappa)).exp()
}

pub fn sf(c: &WeibullCurve, t: f64) -> f64 {
    (-(t.max(0.0) / c.lambda).powf(c.kappa)).exp()
}

/// Mean and standard error of `g(T)` with `T ~ q`, counting only draws in [0, 120].
fn mc_mean(q: &AgeSummary, n: usize, rng: &mut ChaCha8Rng, g: impl Fn(f64) -> f64) -> (f64, f64) {
    let d = Normal::new(q.mean, q.sd).unwrap();
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let t: f64 = d.sample(rng);
        let x = if (0.0..=120.0).contains(&t) { g(t) } else { 0.0 };
        s += x;
        s2 += x * x;
    }
    let m = s / n as f64;
    let var = (s2 / n as f64 - m * m).max(0.0);
    (m, (var / n as f64).sqrt())
}

pub struct McBridge {
    pub nu: f64,
    pub nu_se: f64,
    pub log_rr: f64,
    pub log_rr_se: f64,
}

/// Brute-force Monte Carlo of the OR and RR bridges with `n` draws per integral.
pub fn mc_bridge(curve: &WeibullCurve, base: &WeibullCurve, ages: &AgeDistributions, n: usize, seed: u64) -> McBridge {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = mc_mean(&ages.cases_carrier, n, &mut rng, |t| pdf(curve, t));
    let b = mc_mean(&ages.cases_noncarrier, n, &mut rng, |t| pdf(base, t));
    let c = mc_mean(&ages.controls_carrier, n, &mut rng, |t| sf(curve, t));
    let d = mc_mean(&ages.controls_noncarrier, n, &mut rng, |t| sf(base, t));
    let cv2 = |(m, se): (f64, f64)| (se / m).powi(2);
    let nu = (a.0 / b.0) / (c.0 / d.0);
    let rr_cv = (cv2(a) + cv2(b)).sqrt();
    McBridge {
        nu,
        nu_se: nu * (cv2(a) + cv2(b) + cv2(c) + cv2(d)).sqrt(),
        log_rr: (a.0 / b.0).ln(),
        log_rr_se: rr_cv,
    }
}

pub fn ages(c1: (f64, f64), c0: (f64, f64), h1: (f64, f64), h0: (f64, f64)) -> AgeDistributions {
    let s = |(m, sd): (f64, f64)| AgeSummary::new(m, sd).unwrap();
    AgeDistributions {
        cases_carrier: s(c1),
        cases_noncarrier: s(c0),
        controls_carrier: s(h1),
        controls_noncarrier: s(h0),
    }
}

pub fn ratio_record(id: &str, modality: Modality, est: f64, lo: f64, hi: f64, biased: bool) -> StudyRecord {
    StudyRecord {
        id: id.into(),
        modality,
        biased,
        sample_size: Some(1000),
        penetrance: None,
        ratio: Some(RatioReport {
            estimate: est,
            ci_low: Some(lo),
            ci_high: Some(hi),
            counts: None,
        }),
        ages: AgeDistributions::default(),
        age_reported: false,
    }
}

/// Mean and sd of `n` Metropolis-Hastings draws from `log_target` under `proposal`.
pub fn kernel_moments<P: penmeta::inference::Proposal>(
    proposal: &P,
    start: f64,
    log_target: impl Fn(f64) -> f64,
    n: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = start;
    let mut lx = log_target(x);
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        if let Some(m) = penmeta::inference::mh_step(&mut rng, proposal, x, lx, |y| (log_target(y), ())) {
            x = m.value;
            lx = m.log_target;
        }
        s += x;
        s2 += x * x;
    }
    let mean = s / n as f64;
    (mean, (s2 / n as f64 - mean * mean).sqrt())
}
