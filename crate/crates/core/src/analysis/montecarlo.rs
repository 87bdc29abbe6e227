use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub(crate) const BLOCK: usize = 8192;

/// A sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return Estimate { mean, std_err: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        Estimate { mean, std_err: (var / n).sqrt() }
    }
}

/// Generator for block `block` of a Monte Carlo loop seeded with `seed`.
pub(crate) fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Draws `m` samples in parallel blocks with per-block streams. The result is
/// independent of the thread count.
pub(crate) fn par_samples<F>(seed: u64, m: usize, sample: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let blocks = m.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = block_rng(seed, b as u64);
            let len = BLOCK.min(m - b * BLOCK);
            (0..len).map(|_| sample(&mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

/// `ln(mean(exp(v)))`, stable for any magnitude of `v`.
pub fn log_mean_exp(v: &[f64]) -> f64 {
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return top;
    }
    let s: f64 = v.iter().map(|x| (x - top).exp()).sum();
    top + (s / v.len() as f64).ln()
}
