//! Proposal distributions and the generic Metropolis-Hastings step.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use statrs::function::gamma::ln_gamma;

use super::priors::{log_half_normal_pdf, Interval};
use crate::domain::Modality;

/// A (possibly asymmetric) proposal kernel `q(to | from)`.
pub trait Proposal {
    fn draw<R: Rng + ?Sized>(&self, from: f64, rng: &mut R) -> f64;
    fn log_density(&self, from: f64, to: f64) -> f64;
}

/// Proposal variance as a function of the current value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarianceSchedule {
    /// `log_500(x + offset)`
    LogBase500 { offset: f64 },
    /// `x^exponent`
    Power { exponent: f64 },
}

impl VarianceSchedule {
    pub fn variance(&self, x: f64) -> f64 {
        match *self {
            VarianceSchedule::LogBase500 { offset } => (x + offset).ln() / 500f64.ln(),
            VarianceSchedule::Power { exponent } => x.powf(exponent),
        }
    }
}

pub fn kappa_schedule(modality: Modality) -> VarianceSchedule {
    let offset = match modality {
        Modality::Penetrance => 0.01,
        Modality::Rr | Modality::Sir => 2000.0,
        Modality::Or => 200000.0,
    };
    VarianceSchedule::LogBase500 { offset }
}

pub fn lambda_schedule(modality: Modality) -> VarianceSchedule {
    let exponent = match modality {
        Modality::Penetrance => 0.4,
        Modality::Rr | Modality::Sir => 0.9,
        Modality::Or => 1.2,
    };
    VarianceSchedule::Power { exponent }
}

/// Gamma proposal with mean equal to the current value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaProposal {
    pub schedule: VarianceSchedule,
}

impl GammaProposal {
    /// `(shape, scale)` with `shape * scale = from` and `shape * scale^2 = variance`.
    pub fn params(&self, from: f64) -> (f64, f64) {
        let var = self.schedule.variance(from);
        (from * from / var, var / from)
    }
}

impl Proposal for GammaProposal {
    fn draw<R: Rng + ?Sized>(&self, from: f64, rng: &mut R) -> f64 {
        let (shape, scale) = self.params(from);
        Gamma::new(shape, scale).expect("positive proposal parameters").sample(rng)
    }

    fn log_density(&self, from: f64, to: f64) -> f64 {
        let (shape, scale) = self.params(from);
        if !(to > 0.0) {
            return f64::NEG_INFINITY;
        }
        (shape - 1.0) * to.ln() - to / scale - ln_gamma(shape) - shape * scale.ln()
    }
}

/// Half-normal proposal centered at zero with scale `factor * from`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfNormalProposal {
    pub factor: f64,
    pub floor: f64,
}

impl Default for HalfNormalProposal {
    fn default() -> Self {
        Self {
            factor: 0.836,
            floor: 1e-3,
        }
    }
}

impl HalfNormalProposal {
    pub fn scale(&self, from: f64) -> f64 {
        (self.factor * from).max(self.floor)
    }
}

impl Proposal for HalfNormalProposal {
    fn draw<R: Rng + ?Sized>(&self, from: f64, rng: &mut R) -> f64 {
        let z: f64 = Normal::new(0.0, self.scale(from)).expect("positive scale").sample(rng);
        z.abs()
    }

    fn log_density(&self, from: f64, to: f64) -> f64 {
        log_half_normal_pdf(to, self.scale(from))
    }
}

/// Uniform proposal on `[max(lo, x - h), min(x + h, hi)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformWindow {
    pub half_width: f64,
    pub support: Interval,
}

impl UniformWindow {
    pub fn window(&self, from: f64) -> (f64, f64) {
        (
            (from - self.half_width).max(self.support.lo),
            (from + self.half_width).min(self.support.hi),
        )
    }

    pub fn width(&self, from: f64) -> f64 {
        let (lo, hi) = self.window(from);
        hi - lo
    }
}

impl Proposal for UniformWindow {
    fn draw<R: Rng + ?Sized>(&self, from: f64, rng: &mut R) -> f64 {
        let (lo, hi) = self.window(from);
        lo + (hi - lo) * rng.random::<f64>()
    }

    fn log_density(&self, from: f64, to: f64) -> f64 {
        let (lo, hi) = self.window(from);
        if to >= lo && to <= hi {
            -(hi - lo).ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Accepted move from [`mh_step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Move<T> {
    pub value: f64,
    pub log_target: f64,
    pub extra: T,
}

/// Metropolis-Hastings with the Hastings correction `q(old|new) / q(new|old)`.
/// `eval` returns the log target at the candidate plus any by-product the
/// caller wants to keep on acceptance. Non-finite candidate targets are
/// always rejected.
pub fn mh_step<R, P, T>(
    rng: &mut R,
    proposal: &P,
    current: f64,
    current_log_target: f64,
    eval: impl FnOnce(f64) -> (f64, T),
) -> Option<Move<T>>
where
    R: Rng + ?Sized,
    P: Proposal,
{
    let candidate = proposal.draw(current, rng);
    let (log_target, extra) = eval(candidate);
    let log_ratio = log_target - current_log_target + proposal.log_density(candidate, current)
        - proposal.log_density(current, candidate);
    if !log_target.is_finite() || log_ratio.is_nan() {
        return None;
    }
    let accept = log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio;
    accept.then_some(Move {
        value: candidate,
        log_target,
        extra,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn schedules() {
        let v = kappa_schedule(Modality::Penetrance).variance(4.5);
        assert!((v - 4.51f64.ln() / 500f64.ln()).abs() < 1e-15);
        assert!((v - 0.242380).abs() < 1e-5, "{v}");
        assert!((lambda_schedule(Modality::Or).variance(95.25) - 236.94).abs() < 0.01);
        assert!((lambda_schedule(Modality::Penetrance).variance(95.25) - 6.1879).abs() < 1e-3);
        assert_eq!(kappa_schedule(Modality::Sir), kappa_schedule(Modality::Rr));
    }

    #[test]
    fn gamma_proposal_moments() {
        let p = GammaProposal {
            schedule: kappa_schedule(Modality::Or),
        };
        let (shape, scale) = p.params(3.5);
        assert!((shape * scale - 3.5).abs() < 1e-12);
        assert!((shape * scale * scale - p.schedule.variance(3.5)).abs() < 1e-12);
    }

    #[test]
    fn bias_proposal_scale() {
        let p = HalfNormalProposal::default();
        assert!((p.scale(0.5) - 0.418).abs() < 1e-12);
        assert_eq!(p.scale(0.0), 1e-3);
    }

    #[test]
    fn uniform_windows() {
        let a = UniformWindow {
            half_width: 9.0,
            support: Interval::new(7.5, 27.5),
        };
        assert_eq!(a.window(17.5), (8.5, 26.5));
        assert_eq!(a.width(17.5), 18.0);
        assert_eq!(a.window(8.0), (7.5, 17.0));
        assert_eq!(a.width(8.0), 9.5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for start in [7.5, 8.0, 17.5, 27.0, 27.5] {
            for _ in 0..1000 {
                assert!(a.support.contains(a.draw(start, &mut rng)));
            }
        }
        // Near the boundary the Hastings correction is width(old)/width(new) != 1.
        let log_q = a.log_density(17.0, 8.0) - a.log_density(8.0, 17.0);
        assert!((log_q - (9.5f64 / 18.0).ln()).abs() < 1e-12);
    }

    /// A proposal that always returns a fixed point, for exercising the accept rule.
    struct Fixed(f64, f64, f64);
    impl Proposal for Fixed {
        fn draw<R: Rng + ?Sized>(&self, _: f64, _: &mut R) -> f64 {
            self.0
        }
        fn log_density(&self, _from: f64, to: f64) -> f64 {
            if to == self.0 {
                self.1
            } else {
                self.2
            }
        }
    }

    #[test]
    fn uphill_symmetric_moves_always_accepted() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = Fixed(2.0, 0.0, 0.0);
        for _ in 0..1000 {
            assert!(mh_step(&mut rng, &p, 1.0, -3.0, |_| (-1.0, ())).is_some());
        }
    }

    #[test]
    fn impossible_targets_never_accepted() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = Fixed(2.0, 0.0, 0.0);
        for _ in 0..1000 {
            assert!(mh_step(&mut rng, &p, 1.0, -3.0, |_| (f64::NEG_INFINITY, ())).is_none());
            assert!(mh_step(&mut rng, &p, 1.0, -3.0, |_| (f64::NAN, ())).is_none());
        }
    }

    #[test]
    fn identical_proposal_is_accepted() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inner = GammaProposal {
            schedule: lambda_schedule(Modality::Or),
        };
        let q = Deterministic { to: 95.25, inner };
        for _ in 0..100 {
            assert!(mh_step(&mut rng, &q, 95.25, -2.0, |_| (-2.0, ())).is_some());
        }
    }

    #[test]
    fn flat_target_acceptance_equals_q_ratio() {
        // With a flat target the acceptance probability is min(1, q(old|new)/q(new|old)).
        let p = GammaProposal {
            schedule: kappa_schedule(Modality::Penetrance),
        };
        let transitions = [(3.0, 3.4), (3.0, 2.6), (4.5, 5.5), (1.2, 1.0), (6.0, 6.1)];
        for (i, &(from, to)) in transitions.iter().enumerate() {
            // Hand-computed Gamma densities with shape = m^2/v, scale = v/m.
            let dens = |m: f64, x: f64| {
                let v = (m + 0.01).ln() / 500f64.ln();
                let (k, th) = (m * m / v, v / m);
                (k - 1.0) * x.ln() - x / th - statrs::function::gamma::ln_gamma(k) - k * th.ln()
            };
            let expect = (dens(to, from) - dens(from, to)).exp().min(1.0);
            let q = Deterministic { to, inner: p };
            let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
            let n = 40_000;
            let hits = (0..n)
                .filter(|_| mh_step(&mut rng, &q, from, 0.0, |_| (0.0, ())).is_some())
                .count();
            let rate = hits as f64 / n as f64;
            let se = (expect * (1.0 - expect) / n as f64).sqrt().max(1e-4);
            assert!((rate - expect).abs() < 5.0 * se, "{from}->{to}: {rate} vs {expect}");
        }
    }

    /// Forces the candidate but keeps the wrapped proposal's densities.
    struct Deterministic {
        to: f64,
        inner: GammaProposal,
    }
    impl Proposal for Deterministic {
        fn draw<R: Rng + ?Sized>(&self, _: f64, _: &mut R) -> f64 {
            self.to
        }
        fn log_density(&self, from: f64, to: f64) -> f64 {
            self.inner.log_density(from, to)
        }
    }
}
