use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::domain::Modality;
use crate::error::{Error, Result};
use crate::likelihood::StudyParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo > 0.0 && self.lo < self.hi && self.hi.is_finite()) {
            return Err(Error::Contract(format!(
                "hyperprior bounds for {name} must satisfy 0 < lo < hi, got ({}, {})",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// Uniform hyperprior supports. `a`, `c` are Gamma shapes and `b`, `d`
/// Gamma scales for the study-level shape and scale parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperPriorBounds {
    pub a: Interval,
    pub b: Interval,
    pub c: Interval,
    pub d: Interval,
}

impl Default for HyperPriorBounds {
    fn default() -> Self {
        Self {
            a: Interval::new(7.5, 27.5),
            b: Interval::new(0.15, 0.25),
            c: Interval::new(43.0, 63.0),
            d: Interval::new(1.32, 2.02),
        }
    }
}

impl HyperPriorBounds {
    pub fn validate(&self) -> Result<()> {
        self.a.validate("a")?;
        self.b.validate("b")?;
        self.c.validate("c")?;
        self.d.validate("d")
    }

    pub fn get(&self, which: HyperParam) -> Interval {
        match which {
            HyperParam::A => self.a,
            HyperParam::B => self.b,
            HyperParam::C => self.c,
            HyperParam::D => self.d,
        }
    }

    pub fn midpoint(&self) -> Hyper {
        Hyper {
            a: self.a.midpoint(),
            b: self.b.midpoint(),
            c: self.c.midpoint(),
            d: self.d.midpoint(),
        }
    }

    pub fn contains(&self, h: &Hyper) -> bool {
        HyperParam::ALL.iter().all(|&p| self.get(p).contains(h.get(p)))
    }

    fn log_density(&self) -> f64 {
        -HyperParam::ALL.iter().map(|&p| self.get(p).width().ln()).sum::<f64>()
    }
}

/// Half-normal scales for the bias terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasPriorSpec {
    pub sigma_or: f64,
    pub sigma_rr: f64,
}

impl Default for BiasPriorSpec {
    fn default() -> Self {
        Self {
            sigma_or: 0.9,
            sigma_rr: 0.5,
        }
    }
}

impl BiasPriorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_or > 0.0 && self.sigma_rr > 0.0) {
            return Err(Error::Contract("bias prior scales must be positive".into()));
        }
        Ok(())
    }

    pub fn sigma_for(&self, modality: Modality) -> f64 {
        match modality {
            Modality::Or => self.sigma_or,
            _ => self.sigma_rr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyperParam {
    A,
    B,
    C,
    D,
}

impl HyperParam {
    pub const ALL: [HyperParam; 4] = [HyperParam::A, HyperParam::B, HyperParam::C, HyperParam::D];

    pub fn name(self) -> &'static str {
        match self {
            HyperParam::A => "a",
            HyperParam::B => "b",
            HyperParam::C => "c",
            HyperParam::D => "d",
        }
    }

    /// Proposal window half-width.
    pub fn step(self) -> f64 {
        match self {
            HyperParam::A => 9.0,
            HyperParam::B => 0.04,
            HyperParam::C => 8.0,
            HyperParam::D => 0.22,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Hyper {
    pub fn get(&self, p: HyperParam) -> f64 {
        match p {
            HyperParam::A => self.a,
            HyperParam::B => self.b,
            HyperParam::C => self.c,
            HyperParam::D => self.d,
        }
    }

    pub fn set(&mut self, p: HyperParam, v: f64) {
        match p {
            HyperParam::A => self.a = v,
            HyperParam::B => self.b = v,
            HyperParam::C => self.c = v,
            HyperParam::D => self.d = v,
        }
    }

    /// Population-level Weibull shape `a * b`.
    pub fn kappa(&self) -> f64 {
        self.a * self.b
    }

    /// Population-level Weibull scale `c * d`.
    pub fn lambda(&self) -> f64 {
        self.c * self.d
    }
}

/// Gamma log-density in the shape/scale parameterization.
pub fn log_gamma_pdf(x: f64, shape: f64, scale: f64) -> f64 {
    if !(x > 0.0) || !x.is_finite() {
        return f64::NEG_INFINITY;
    }
    (shape - 1.0) * x.ln() - x / scale - ln_gamma(shape) - shape * scale.ln()
}

pub fn log_half_normal_pdf(x: f64, sigma: f64) -> f64 {
    if !(x >= 0.0) || !x.is_finite() {
        return f64::NEG_INFINITY;
    }
    (2.0f64 / std::f64::consts::PI).sqrt().ln() - sigma.ln() - 0.5 * (x / sigma).powi(2)
}

/// Joint log prior of study parameters and hyperparameters. `modalities`
/// is aligned with `studies`; bias terms use the half-normal scale of
/// their study's modality.
pub fn log_prior(
    studies: &[StudyParams],
    modalities: &[Modality],
    hyper: &Hyper,
    bounds: &HyperPriorBounds,
    bias_prior: &BiasPriorSpec,
) -> f64 {
    if !bounds.contains(hyper) {
        return f64::NEG_INFINITY;
    }
    let mut total = bounds.log_density();
    for (p, &m) in studies.iter().zip(modalities) {
        total += log_gamma_pdf(p.curve.kappa, hyper.a, hyper.b);
        total += log_gamma_pdf(p.curve.lambda, hyper.c, hyper.d);
        if let Some(b) = p.bias {
            total += log_half_normal_pdf(b, bias_prior.sigma_for(m));
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::WeibullCurve;

    #[test]
    fn gamma_logpdf_matches_statrs() {
        use statrs::distribution::{Continuous, Gamma};
        for (x, shape, scale) in [(3.5, 17.5, 0.2), (88.51, 53.0, 1.67), (0.3, 7.5, 0.15)] {
            let reference = Gamma::new(shape, 1.0 / scale).unwrap().ln_pdf(x);
            assert!((log_gamma_pdf(x, shape, scale) - reference).abs() < 1e-12);
        }
    }

    #[test]
    fn half_normal_mode() {
        let s: f64 = 0.9;
        let expect = (2.0f64.sqrt() / (std::f64::consts::PI.sqrt() * s)).ln();
        assert!((log_half_normal_pdf(0.0, s) - expect).abs() < 1e-14);
        assert_eq!(log_half_normal_pdf(-0.1, s), f64::NEG_INFINITY);
    }

    #[test]
    fn outside_bounds_is_impossible() {
        let bounds = HyperPriorBounds::default();
        let mut h = bounds.midpoint();
        h.a = 30.0;
        assert_eq!(log_prior(&[], &[], &h, &bounds, &BiasPriorSpec::default()), f64::NEG_INFINITY);
    }

    #[test]
    fn single_study_at_gamma_mean() {
        let bounds = HyperPriorBounds::default();
        let h = bounds.midpoint();
        let curve = WeibullCurve::new(h.kappa(), h.lambda()).unwrap();
        let lp = log_prior(
            &[StudyParams::unbiased(curve)],
            &[Modality::Or],
            &h,
            &bounds,
            &BiasPriorSpec::default(),
        );
        // Independent reference: explicit Gamma densities plus uniform constants.
        let g = |x: f64, k: f64, th: f64| {
            (x.powf(k - 1.0) * (-x / th).exp() / (statrs::function::gamma::gamma(k) * th.powf(k))).ln()
        };
        let expect = g(h.kappa(), h.a, h.b) + g(h.lambda(), h.c, h.d)
            - (20.0f64 * 0.1 * 20.0 * 0.7).ln();
        assert!((lp - expect).abs() < 1e-9, "{lp} vs {expect}");
    }
}
