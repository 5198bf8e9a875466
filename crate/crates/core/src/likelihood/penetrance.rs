//! Multivariate-normal likelihood for studies reporting age-specific
//! penetrance on the logit scale, and the covariance it needs.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::{logit, PenetranceReport, WeibullCurve, Z95};
use crate::error::{Error, Result};
use crate::survival::{simulate_cohort, Censoring, KaplanMeier};

/// Logit-scale covariance of a study's reported penetrances.
#[derive(Debug, Clone, PartialEq)]
pub struct PenetranceCov {
    matrix: DMatrix<f64>,
}

impl PenetranceCov {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let m = matrix.nrows();
        if m == 0 || matrix.ncols() != m {
            return Err(Error::Domain("covariance must be a non-empty square matrix".into()));
        }
        for i in 0..m {
            if !(matrix[(i, i)] > 0.0 && matrix[(i, i)].is_finite()) {
                return Err(Error::Domain(format!("covariance diagonal entry {i} must be positive")));
            }
            for j in 0..i {
                if matrix[(i, j)] != matrix[(j, i)] {
                    return Err(Error::Domain("covariance must be symmetric".into()));
                }
            }
        }
        if matrix.clone().cholesky().is_none() {
            return Err(Error::Domain("covariance is not positive definite".into()));
        }
        Ok(Self { matrix })
    }

    /// Independent ages: variances on the diagonal only.
    pub fn diagonal(variances: &[f64]) -> Result<Self> {
        Self::from_matrix(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(variances)))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Correlation matrix implied by the covariance.
    pub fn correlation(&self) -> DMatrix<f64> {
        let m = self.dim();
        DMatrix::from_fn(m, m, |i, j| {
            self.matrix[(i, j)] / (self.matrix[(i, i)] * self.matrix[(j, j)]).sqrt()
        })
    }
}

/// Settings for the simulation-based off-diagonal approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovSimulation {
    pub proto_curve: WeibullCurve,
    pub sims: usize,
    pub censoring: Censoring,
    pub max_retries: usize,
}

impl Default for CovSimulation {
    fn default() -> Self {
        Self {
            proto_curve: WeibullCurve {
                kappa: 4.55,
                lambda: 95.25,
            },
            sims: 500,
            censoring: Censoring::default(),
            max_retries: 100,
        }
    }
}

/// Covariance with interval-derived variances and off-diagonals from the
/// empirical correlation of logit Kaplan-Meier estimates across simulated
/// cohorts of the study's size.
pub fn build_penetrance_cov(
    report: &PenetranceReport,
    sample_size: u64,
    sim: &CovSimulation,
    seed: u64,
) -> Result<PenetranceCov> {
    report.validate().map_err(Error::Domain)?;
    if sample_size == 0 || sim.sims < 3 {
        return Err(Error::Contract("need a positive sample size and at least 3 simulations".into()));
    }
    let variances = report.logit_variances()?;
    let m = variances.len();
    if m == 1 {
        return PenetranceCov::diagonal(&variances);
    }
    let corr = simulated_correlation(&report.ages, sample_size as usize, sim, seed)?;
    let corr = repair_correlation(corr);
    let sd: Vec<f64> = variances.iter().map(|v| v.sqrt()).collect();
    let mut cov = DMatrix::from_fn(m, m, |i, j| corr[(i, j)] * sd[i] * sd[j]);
    for i in 0..m {
        cov[(i, i)] = variances[i];
        for j in 0..i {
            cov[(j, i)] = cov[(i, j)];
        }
    }
    PenetranceCov::from_matrix(cov)
}

/// Empirical correlation of logit KM penetrance across `sim.sims` cohorts.
pub fn simulated_correlation(
    ages: &[f64],
    n: usize,
    sim: &CovSimulation,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let m = ages.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(sim.sims);
    let mut failures = 0;
    while rows.len() < sim.sims {
        let obs = simulate_cohort(&sim.proto_curve, n, &sim.censoring, &mut rng);
        let km = KaplanMeier::fit(&obs);
        let row: Option<Vec<f64>> = ages
            .iter()
            .map(|&a| km.penetrance_with_ci(a, Z95).and_then(|(f, _, _)| logit(f).ok()))
            .collect();
        match row {
            Some(r) => rows.push(r),
            None => {
                failures += 1;
                if failures > sim.max_retries {
                    return Err(Error::Degenerate(format!(
                        "simulated cohorts of {n} repeatedly lacked subjects at risk at ages {ages:?}"
                    )));
                }
            }
        }
    }
    let k = rows.len() as f64;
    let means: Vec<f64> = (0..m).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / k).collect();
    let mut cov = DMatrix::<f64>::zeros(m, m);
    for r in &rows {
        for i in 0..m {
            for j in 0..=i {
                cov[(i, j)] += (r[i] - means[i]) * (r[j] - means[j]);
            }
        }
    }
    let mut corr = DMatrix::<f64>::identity(m, m);
    for i in 0..m {
        for j in 0..i {
            let denom = (cov[(i, i)] * cov[(j, j)]).sqrt();
            let r = if denom > 0.0 { cov[(i, j)] / denom } else { 0.0 };
            corr[(i, j)] = r;
            corr[(j, i)] = r;
        }
    }
    Ok(corr)
}

/// Floor eigenvalues at `1e-8 * max` and rescale back to a unit diagonal.
fn repair_correlation(corr: DMatrix<f64>) -> DMatrix<f64> {
    let m = corr.nrows();
    let eig = SymmetricEigen::new(corr);
    let max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let floor = 1e-8 * max;
    let vals = eig.eigenvalues.map(|v| v.max(floor));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            1.0
        } else {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            rebuilt[(a, b)] / (rebuilt[(a, a)] * rebuilt[(b, b)]).sqrt()
        }
    })
}

/// Precomputed MVN likelihood of one penetrance study.
#[derive(Debug, Clone)]
pub struct PenetranceModel {
    ages: Vec<f64>,
    observed: Vec<f64>,
    /// Lower Cholesky factor, row-major.
    chol: Vec<f64>,
    log_norm: f64,
}

impl PenetranceModel {
    pub fn new(report: &PenetranceReport, cov: &PenetranceCov) -> Result<Self> {
        report.validate().map_err(Error::Domain)?;
        let m = report.len();
        if cov.dim() != m {
            return Err(Error::Contract(format!(
                "covariance is {}x{} but the report has {m} ages",
                cov.dim(),
                cov.dim()
            )));
        }
        let l = cov
            .matrix()
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Domain("covariance is not positive definite".into()))?
            .unpack();
        let log_det: f64 = (0..m).map(|i| 2.0 * l[(i, i)].ln()).sum();
        let mut chol = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..=i {
                chol[i * m + j] = l[(i, j)];
            }
        }
        Ok(Self {
            ages: report.ages.clone(),
            observed: report.values.iter().map(|&v| logit(v)).collect::<Result<_>>()?,
            chol,
            log_norm: -0.5 * (m as f64 * (2.0 * std::f64::consts::PI).ln() + log_det),
        })
    }

    pub fn loglik(&self, curve: &WeibullCurve) -> f64 {
        let m = self.ages.len();
        let mut z = [0.0f64; 16];
        let mut z_heap;
        let z: &mut [f64] = if m <= 16 {
            &mut z[..m]
        } else {
            z_heap = vec![0.0; m];
            &mut z_heap
        };
        let mut quad = 0.0;
        for i in 0..m {
            let f = curve.cdf_unchecked(self.ages[i]);
            if !(f > 0.0 && f < 1.0) {
                return f64::NEG_INFINITY;
            }
            let resid = self.observed[i] - (f / (1.0 - f)).ln();
            let row = &self.chol[i * m..i * m + i + 1];
            let mut acc = resid;
            for j in 0..i {
                acc -= row[j] * z[j];
            }
            z[i] = acc / row[i];
            quad += z[i] * z[i];
        }
        self.log_norm - 0.5 * quad
    }
}
