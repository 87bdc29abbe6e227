//! Smoothing gradient descent with Armijo backtracking, used as a local baseline.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::ObjectiveSpec;

pub const MAX_HALVINGS: u32 = 60;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpgConfig {
    pub alpha2: f64,
    pub mu0: f64,
    pub max_iters: u64,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub initial_step: f64,
    pub grad_tol: f64,
}

impl Default for SpgConfig {
    fn default() -> Self {
        SpgConfig {
            alpha2: 0.9,
            mu0: 0.1,
            max_iters: 5000,
            armijo_c: 1e-4,
            backtrack: 0.5,
            initial_step: 1.0,
            grad_tol: 1e-8,
        }
    }
}

impl SpgConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.alpha2) {
            return Err(Error::invalid("alpha2", format!("must lie in (0, 1), got {}", self.alpha2)));
        }
        if !open_unit(self.armijo_c) {
            return Err(Error::invalid("armijo_c", format!("must lie in (0, 1), got {}", self.armijo_c)));
        }
        if !open_unit(self.backtrack) {
            return Err(Error::invalid("backtrack", format!("must lie in (0, 1), got {}", self.backtrack)));
        }
        for (name, v) in [("mu0", self.mu0), ("initial_step", self.initial_step), ("grad_tol", self.grad_tol)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpgStop {
    GradTol,
    MaxIters,
    LineSearchFailed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpgReport {
    pub x0: Vec<f64>,
    pub x: Vec<f64>,
    pub f_x: f64,
    pub normalized_gap: f64,
    pub success: bool,
    pub iterations: u64,
    pub grad_norm: f64,
    pub mu_final: f64,
    pub stop: SpgStop,
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|g| g * g).sum()
}

/// `x_{k+1} = x_k - a_k grad f~(x_k, mu_k)`, `mu_{k+1} = alpha2 mu_k`, with `a_k`
/// from Armijo backtracking on `f~(., mu_k)`.
pub fn spg_run(objective: &ObjectiveSpec, x0: &[f64], cfg: &SpgConfig, success_threshold: f64) -> Result<SpgReport> {
    cfg.validate()?;
    if x0.len() != objective.dim() {
        return Err(Error::DimensionMismatch { expected: objective.dim(), got: x0.len() });
    }
    if let Some(&v) = x0.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "x0", value: v });
    }
    let obj = objective.objective.as_ref();
    let d = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; d];
    let mut trial = vec![0.0; d];
    let mut mu = cfg.mu0;
    let mut iterations = 0;
    let mut stop = SpgStop::MaxIters;

    obj.grad_x(&x, mu, &mut g);
    let mut grad_norm = norm_sq(&g).sqrt();
    while iterations < cfg.max_iters {
        if grad_norm < cfg.grad_tol {
            stop = SpgStop::GradTol;
            break;
        }
        let fx = obj.smoothed(&x, mu);
        let g2 = grad_norm * grad_norm;
        let mut step = cfg.initial_step;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            for ((t, xi), gi) in trial.iter_mut().zip(&x).zip(&g) {
                *t = xi - step * gi;
            }
            if obj.smoothed(&trial, mu) <= fx - cfg.armijo_c * step * g2 {
                accepted = true;
                break;
            }
            step *= cfg.backtrack;
        }
        if !accepted {
            stop = SpgStop::LineSearchFailed;
            break;
        }
        std::mem::swap(&mut x, &mut trial);
        iterations += 1;
        mu *= cfg.alpha2;
        obj.grad_x(&x, mu, &mut g);
        grad_norm = norm_sq(&g).sqrt();
    }
    if stop == SpgStop::MaxIters && grad_norm < cfg.grad_tol {
        stop = SpgStop::GradTol;
    }
    let f_x = objective.value(&x);
    let normalized_gap = objective.normalized_gap(f_x);
    Ok(SpgReport {
        x0: x0.to_vec(),
        x,
        f_x,
        normalized_gap,
        success: normalized_gap < success_threshold,
        iterations,
        grad_norm,
        mu_final: mu,
        stop,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultistartSummary {
    pub objective: String,
    pub n_starts: usize,
    pub n_success: usize,
    pub success_threshold: f64,
    pub successful_starts: Vec<Vec<f64>>,
    pub unsuccessful_starts: Vec<Vec<f64>>,
    pub runs: Vec<SpgReport>,
}

/// Runs [`spg_run`] from every start point in parallel. Results keep the input order.
pub fn spg_multistart(
    objective: &ObjectiveSpec,
    starts: &[Vec<f64>],
    cfg: &SpgConfig,
    success_threshold: f64,
) -> Result<MultistartSummary> {
    let runs: Vec<SpgReport> = starts
        .par_iter()
        .map(|x0| spg_run(objective, x0, cfg, success_threshold))
        .collect::<Result<_>>()?;
    let (ok, bad): (Vec<&SpgReport>, Vec<&SpgReport>) = runs.iter().partition(|r| r.success);
    Ok(MultistartSummary {
        objective: objective.id.clone(),
        n_starts: runs.len(),
        n_success: ok.len(),
        success_threshold,
        successful_starts: ok.iter().map(|r| r.x0.clone()).collect(),
        unsuccessful_starts: bad.iter().map(|r| r.x0.clone()).collect(),
        runs,
    })
}

/// `n` start points drawn uniformly from the objective's box.
pub fn uniform_starts(objective: &ObjectiveSpec, n: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut x = vec![0.0; objective.dim()];
            objective.bounds.sample(&mut rng, &mut x);
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{build_benchmark, BenchmarkId, Quadratic, SearchBox, SmootherKind, SmoothingConstants};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn quadratic() -> ObjectiveSpec {
        let c = SmoothingConstants { kappa: 0.0, eta: 2.0, q: 0.0, mu_bar: 1.0 };
        let b = SearchBox::symmetric(5.0, 2).unwrap();
        ObjectiveSpec::custom("quad", Arc::new(Quadratic::new(vec![1.0, -2.0], 0.5)), c, b, vec![1.0, -2.0]).unwrap()
    }

    #[test]
    fn quadratic_converges() {
        let r = spg_run(&quadratic(), &[4.0, 4.0], &SpgConfig::default(), 0.005).unwrap();
        assert_eq!(r.stop, SpgStop::GradTol);
        assert!(r.grad_norm < 1e-8);
        assert!((r.x[0] - 1.0).abs() < 1e-8 && (r.x[1] + 2.0).abs() < 1e-8);
        assert!(r.success);
    }

    #[test]
    fn f1_from_near_origin_succeeds() {
        let spec = build_benchmark(BenchmarkId::F1, 2, SmootherKind::LogExp).unwrap();
        let r = spg_run(&spec, &[0.01, 0.01], &SpgConfig::default(), 0.005).unwrap();
        assert!(r.success, "{r:?}");
        assert!(r.x.iter().all(|v| v.abs() < 0.05));
    }

    #[test]
    fn rejects_bad_input() {
        let spec = quadratic();
        assert!(spg_run(&spec, &[f64::NAN, 0.0], &SpgConfig::default(), 0.005).is_err());
        assert!(spg_run(&spec, &[0.0], &SpgConfig::default(), 0.005).is_err());
        let bad = SpgConfig { backtrack: 1.0, ..Default::default() };
        assert!(spg_run(&spec, &[0.0, 0.0], &bad, 0.005).is_err());
    }

    #[test]
    fn multistart_partitions_starts() {
        let spec = build_benchmark(BenchmarkId::F1, 2, SmootherKind::LogExp).unwrap();
        let starts = uniform_starts(&spec, 12, 3);
        let s = spg_multistart(&spec, &starts, &SpgConfig { max_iters: 300, ..Default::default() }, 0.005).unwrap();
        assert_eq!(s.n_starts, 12);
        assert_eq!(s.successful_starts.len() + s.unsuccessful_starts.len(), 12);
        assert_eq!(s.runs.iter().map(|r| &r.x0).collect::<Vec<_>>(), starts.iter().collect::<Vec<_>>());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn one_step_satisfies_armijo(x in prop::collection::vec(-5.0f64..5.0, 2)) {
            let spec = build_benchmark(BenchmarkId::F2, 2, SmootherKind::LogExp).unwrap();
            let cfg = SpgConfig { max_iters: 1, ..Default::default() };
            let r = spg_run(&spec, &x, &cfg, 0.005).unwrap();
            prop_assume!(r.iterations == 1);
            let obj = spec.objective.as_ref();
            let mut g = vec![0.0; 2];
            obj.grad_x(&x, cfg.mu0, &mut g);
            let g2 = norm_sq(&g);
            // the accepted step is the distance moved divided by the gradient norm
            let step = r.x.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() / g2.sqrt();
            let lhs = obj.smoothed(&r.x, cfg.mu0);
            let rhs = obj.smoothed(&x, cfg.mu0) - cfg.armijo_c * step * g2;
            prop_assert!(lhs <= rhs + 1e-12 * rhs.abs().max(1.0));
        }
    }
}
