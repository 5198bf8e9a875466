use crate::error::{Error, Result};

/// Gelman-Rubin potential scale reduction over equal-length chains.
///
/// Constant chains (no within-chain spread) and chains with identical
/// means (e.g. a duplicated chain) are reported as [`Error::Degenerate`].
pub fn gelman_rubin(chains: &[&[f64]]) -> Result<f64> {
    let m = chains.len();
    if m < 2 {
        return Err(Error::Contract(format!("need at least 2 chains, got {m}")));
    }
    let n = chains[0].len();
    if n < 10 {
        return Err(Error::Contract(format!("chains need at least 10 draws, got {n}")));
    }
    if chains.iter().any(|c| c.len() != n) {
        return Err(Error::Contract("chains differ in length".into()));
    }
    if chains.iter().flat_map(|c| c.iter()).any(|x| !x.is_finite()) {
        return Err(Error::Domain("chain contains a non-finite draw".into()));
    }
    if chains.iter().all(|c| c.iter().all(|&x| x == c[0])) {
        return Err(Error::Degenerate("every chain is constant".into()));
    }
    let (nf, mf) = (n as f64, m as f64);
    let means: Vec<f64> = chains.iter().map(|c| c.iter().sum::<f64>() / nf).collect();
    if means.iter().all(|&x| x == means[0]) {
        return Err(Error::Degenerate("chains have identical means".into()));
    }
    let grand = means.iter().sum::<f64>() / mf;
    let b = nf / (mf - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (nf - 1.0))
        .sum::<f64>()
        / mf;
    let var_plus = (nf - 1.0) / nf * w + b / nf;
    Ok((var_plus / w).sqrt())
}
