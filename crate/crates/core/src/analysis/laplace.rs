use serde::{Deserialize, Serialize};

use super::montecarlo::par_samples;
use crate::error::{Error, Result};
use crate::objective::{ObjectiveSpec, SearchBox};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceRow {
    pub beta: f64,
    /// `-(1/beta) ln E[exp(-beta f(X))]` with `X` uniform on the box.
    pub value: f64,
    pub std_err: f64,
}

/// Draws `m` uniform points in `bounds` and returns `f` at each.
pub fn sample_values(objective: &ObjectiveSpec, bounds: &SearchBox, m: usize, seed: u64) -> Result<Vec<f64>> {
    if bounds.dim != objective.dim() {
        return Err(Error::DimensionMismatch { expected: objective.dim(), got: bounds.dim });
    }
    if m == 0 {
        return Err(Error::invalid("m", "must be positive"));
    }
    let f = par_samples(seed, m, |rng| {
        let mut x = vec![0.0; bounds.dim];
        bounds.sample(rng, &mut x);
        objective.value(&x)
    });
    if let Some(&v) = f.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "objective sample", value: v });
    }
    Ok(f)
}

/// `-(1/beta) ln mean(exp(-beta f_k))` and its delta-method standard error.
pub fn laplace_from_values(values: &[f64], beta: f64) -> LaplaceRow {
    let f_lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = values.iter().map(|f| (-beta * (f - f_lo)).exp()).collect();
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let var = if w.len() > 1 { w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    LaplaceRow {
        beta,
        value: f_lo - mean.ln() / beta,
        std_err: (var / n).sqrt() / (beta * mean),
    }
}

/// Laplace-principle estimates for each `beta`, all from one shared sample.
pub fn laplace_estimate(
    objective: &ObjectiveSpec,
    bounds: &SearchBox,
    betas: &[f64],
    m: usize,
    seed: u64,
) -> Result<Vec<LaplaceRow>> {
    if betas.is_empty() || betas.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
        return Err(Error::invalid("betas", "need a nonempty list of positive finite values"));
    }
    if !betas.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::invalid("betas", "must be strictly increasing"));
    }
    let values = sample_values(objective, bounds, m, seed)?;
    Ok(betas.iter().map(|&b| laplace_from_values(&values, b)).collect())
}
