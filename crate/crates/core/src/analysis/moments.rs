//! Second-moment laws of pairwise particle differences.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::montecarlo::{block_rng, Estimate, BLOCK};
use crate::dynamics::{dscbo_step, Ensemble, NoiseMode, NoiseSource, SolverConfig};
use crate::error::{Error, Result};
use crate::objective::Constant;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayProbe {
    pub lambda: f64,
    pub sigma: f64,
    pub t_checkpoints: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

impl DecayProbe {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::invalid("probe", "lambda and sigma must be finite, sigma >= 0"));
        }
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples", "must be positive"));
        }
        let increasing = self.t_checkpoints.windows(2).all(|w| w[0] < w[1]);
        if self.t_checkpoints.is_empty() || !increasing || self.t_checkpoints[0] < 0.0 {
            return Err(Error::invalid("t_checkpoints", "need a nonempty, strictly increasing list of times >= 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub t: f64,
    pub empirical: f64,
    /// i.i.d. formula; conservative under stratification.
    pub std_err: f64,
    pub theoretical: f64,
}

impl MomentRow {
    pub fn relative_error(&self) -> f64 {
        (self.empirical - self.theoretical).abs() / self.theoretical
    }
}

/// `m` standard normal draws, one from each of `m` equiprobable strata.
fn stratified_normals(seed: u64, m: usize) -> Vec<f64> {
    let normal = Normal::standard();
    (0..m.div_ceil(BLOCK))
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = block_rng(seed, b as u64);
            let start = b * BLOCK;
            let end = (start + BLOCK).min(m);
            (start..end)
                .map(|k| {
                    // open interval keeps the quantile finite
                    let u: f64 = rng.random_range(f64::EPSILON..1.0);
                    normal.inverse_cdf((k as f64 + u) / m as f64)
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Monte Carlo check of the closed-form pairwise difference
/// `x^{ij}(t) = x^{ij}(0) exp(-(lambda + sigma^2/2) t + sigma W(t))`
/// against `E[x^{ij}(t)^2] = exp(-(2 lambda - sigma^2) t) x^{ij}(0)^2`.
///
/// `W(t)` is drawn by stratified sampling of its quantile, which keeps the
/// `N(0, t)` law while taming the lognormal tail.
pub fn exact_pairwise_moment(probe: &DecayProbe, init_diff: f64) -> Result<Vec<MomentRow>> {
    probe.validate()?;
    let DecayProbe { lambda, sigma, .. } = *probe;
    let rows = probe
        .t_checkpoints
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let drift = -(lambda + 0.5 * sigma * sigma) * t;
            let sd = t.sqrt();
            let seed = probe.seed.wrapping_add((k as u64) << 32);
            let squares: Vec<f64> = stratified_normals(seed, probe.n_samples)
                .into_iter()
                .map(|z| {
                    let x = init_diff * (drift + sigma * sd * z).exp();
                    x * x
                })
                .collect();
            let est = Estimate::from_samples(&squares);
            MomentRow {
                t,
                empirical: est.mean,
                std_err: est.std_err,
                theoretical: (-(2.0 * lambda - sigma * sigma) * t).exp() * init_diff * init_diff,
            }
        })
        .collect();
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub step: u64,
    pub t: f64,
    pub empirical: f64,
    pub std_err: f64,
    pub theoretical: f64,
    /// Population standard error of the mean over `n_seeds` systems.
    pub exact_std_err: f64,
    /// `(empirical - theoretical) / exact_std_err`; zero when both agree exactly.
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub lambda: f64,
    pub sigma: f64,
    pub h: f64,
    pub n_seeds: usize,
    /// `exp(-2 lambda h)(1 + sigma^2 h)`
    pub factor_per_step: f64,
    pub rows: Vec<DecayRow>,
    pub max_abs_z: f64,
}

impl DecayReport {
    pub fn within(&self, n_se: f64) -> bool {
        self.max_abs_z <= n_se
    }
}

pub const MIN_DECAY_SEEDS: usize = 500;

/// Runs `n_seeds` two-particle systems on a constant objective with the
/// two-step update and compares `E[(x^1_l - x^2_l)^2]` with
/// `[exp(-2 lambda h)(1 + sigma^2 h)]^n` every `every` steps.
///
/// The per-coordinate squared difference is a product of i.i.d. factors
/// `exp(-2 lambda h)(1 - sigma sqrt(h) w)^2`, so its variance is known in closed
/// form; `z` is measured in that exact standard error.
pub fn verify_discrete_decay(cfg: &SolverConfig, n_steps: u64, n_seeds: usize, every: u64) -> Result<DecayReport> {
    cfg.validate()?;
    if cfg.noise_mode != NoiseMode::Common {
        return Err(Error::invalid("noise_mode", "the discrete decay law holds for common noise"));
    }
    if n_seeds < MIN_DECAY_SEEDS {
        return Err(Error::invalid("n_seeds", format!("need at least {MIN_DECAY_SEEDS}, got {n_seeds}")));
    }
    if every == 0 || n_steps == 0 {
        return Err(Error::invalid("n_steps", "steps and checkpoint spacing must be positive"));
    }
    let d = cfg.dim;
    let cfg = SolverConfig { n_particles: 2, ..cfg.clone() };
    let objective = Constant { dim: d, level: 0.0 };
    let checkpoints: Vec<u64> = (0..=n_steps).filter(|n| n % every == 0 || *n == n_steps).collect();

    // per seed: squared difference averaged over coordinates, at each checkpoint
    let per_seed: Vec<Vec<f64>> = (0..n_seeds as u64)
        .into_par_iter()
        .map(|s| -> Result<Vec<f64>> {
            let mut positions = vec![0.0; d];
            positions.extend(std::iter::repeat_n(1.0, d));
            let mut ens = Ensemble::new(positions, d, cfg.mu0)?;
            let mut noise = NoiseSource::new(cfg.seed ^ s.wrapping_mul(0x9E37_79B9_7F4A_7C15), cfg.noise_mode);
            let mut out = Vec::with_capacity(checkpoints.len());
            let sq = |e: &Ensemble| {
                e.particle(0).iter().zip(e.particle(1)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / d as f64
            };
            for &c in &checkpoints {
                while ens.step_index < c {
                    dscbo_step(&mut ens, &cfg, &mut noise, &objective)?;
                }
                out.push(sq(&ens));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let factor = cfg.discrete_decay_factor();
    let s2h = cfg.sigma * cfg.sigma * cfg.h;
    let fourth = (-4.0 * cfg.lambda * cfg.h).exp() * (1.0 + 6.0 * s2h + 3.0 * s2h * s2h);
    let rows: Vec<DecayRow> = checkpoints
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let column: Vec<f64> = per_seed.iter().map(|v| v[k]).collect();
            let est = Estimate::from_samples(&column);
            let theoretical = factor.powi(n as i32);
            let diff = est.mean - theoretical;
            let var = (fourth.powi(n as i32) - theoretical * theoretical).max(0.0) / d as f64;
            let exact_std_err = (var / n_seeds as f64).sqrt();
            let z = if diff.abs() <= 1e-12 * theoretical { 0.0 } else { diff / exact_std_err };
            DecayRow {
                step: n,
                t: n as f64 * cfg.h,
                empirical: est.mean,
                std_err: est.std_err,
                theoretical,
                exact_std_err,
                z,
            }
        })
        .collect();
    let max_abs_z = rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max);
    Ok(DecayReport {
        lambda: cfg.lambda,
        sigma: cfg.sigma,
        h: cfg.h,
        n_seeds,
        factor_per_step: factor,
        rows,
        max_abs_z,
    })
}
