//! Grid certification of smoothing constants and gradient checks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{grid_per_axis, Objective, ObjectiveSpec, SearchBox, SmoothingConstants};
use crate::error::{Error, Result};

const ESTIMATE_MARGIN: f64 = 1.5;
// floating-point slack on the comparison against the declared constant
const CERT_RTOL: f64 = 1e-9;

/// Empirical `kappa` and `eta` over a grid of `bounds` and a log-spaced set of
/// `mu` in `[1e-5 mu_bar, mu_bar]`, inflated by a 1.5 margin.
///
/// `kappa` covers both `|d/dmu f~| mu^q` and `|f~ - f| / mu^(1-q)`. `eta` bounds
/// the Frobenius norm of a finite-difference Hessian of `grad_x`, which
/// dominates the spectral norm.
pub fn estimate_constants(
    objective: &dyn Objective,
    bounds: &SearchBox,
    q: f64,
    mu_bar: f64,
) -> SmoothingConstants {
    let d = objective.dim();
    let per_axis = grid_per_axis(d, 101, 2.0e4);
    let mus: Vec<f64> = (0..=10).map(|k| mu_bar * 10f64.powf(-0.5 * k as f64)).collect();
    let mut kappa: f64 = 0.0;
    let mut eta: f64 = 0.0;
    let mut xp = vec![0.0; d];
    let mut gp = vec![0.0; d];
    let mut gm = vec![0.0; d];
    bounds.for_each_grid_point(per_axis, |x| {
        let fx = objective.value(x);
        for &mu in &mus {
            let gap = (objective.smoothed(x, mu) - fx).abs() / mu.powf(1.0 - q);
            let slope = objective.dmu(x, mu).abs() * mu.powf(q);
            kappa = kappa.max(gap).max(slope);

            let hs = 1e-3 * mu.min(1.0);
            let mut frob = 0.0;
            for k in 0..d {
                xp.copy_from_slice(x);
                xp[k] += hs;
                objective.grad_x(&xp, mu, &mut gp);
                xp[k] -= 2.0 * hs;
                objective.grad_x(&xp, mu, &mut gm);
                frob += gp.iter().zip(&gm).map(|(a, b)| ((a - b) / (2.0 * hs)).powi(2)).sum::<f64>();
            }
            eta = eta.max(frob.sqrt() * mu.powf(q + 1.0));
        }
    });
    SmoothingConstants { kappa: ESTIMATE_MARGIN * kappa, eta: ESTIMATE_MARGIN * eta, q, mu_bar }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub id: String,
    pub grid_resolution: usize,
    pub mu_samples: Vec<f64>,
    pub kappa: f64,
    pub q: f64,
    /// `max |f~ - f| / mu^(1-q)` over the grid.
    pub max_value_ratio: f64,
    pub worst_value_point: Vec<f64>,
    /// `max |d/dmu f~| / mu^-q` over the grid.
    pub max_dmu_ratio: f64,
    pub worst_dmu_point: Vec<f64>,
    pub passed: bool,
}

/// Checks the declared `kappa` of `spec` against observed worst-case ratios on a
/// `grid_resolution^d` grid of the search box.
pub fn certify_constants(
    spec: &ObjectiveSpec,
    grid_resolution: usize,
    mu_samples: &[f64],
) -> Result<CertReport> {
    let SmoothingConstants { kappa, q, mu_bar, .. } = spec.constants;
    if mu_samples.is_empty() {
        return Err(Error::invalid("mu_samples", "need at least one sample"));
    }
    if let Some(&bad) = mu_samples.iter().find(|&&m| !(m > 0.0 && m <= mu_bar)) {
        return Err(Error::invalid("mu_samples", format!("{bad} outside (0, {mu_bar}]")));
    }
    if grid_resolution < 2 {
        return Err(Error::invalid("grid_resolution", "need at least 2 points per axis"));
    }
    let obj = spec.objective.as_ref();
    let mut report = CertReport {
        id: spec.id.clone(),
        grid_resolution,
        mu_samples: mu_samples.to_vec(),
        kappa,
        q,
        max_value_ratio: 0.0,
        worst_value_point: spec.x_star.clone(),
        max_dmu_ratio: 0.0,
        worst_dmu_point: spec.x_star.clone(),
        passed: false,
    };
    spec.bounds.for_each_grid_point(grid_resolution, |x| {
        let fx = obj.value(x);
        for &mu in mu_samples {
            let gap = (obj.smoothed(x, mu) - fx).abs() / mu.powf(1.0 - q);
            if gap > report.max_value_ratio {
                report.max_value_ratio = gap;
                report.worst_value_point = x.to_vec();
            }
            let slope = obj.dmu(x, mu).abs() * mu.powf(q);
            if slope > report.max_dmu_ratio {
                report.max_dmu_ratio = slope;
                report.worst_dmu_point = x.to_vec();
            }
        }
    });
    let limit = kappa * (1.0 + CERT_RTOL);
    report.passed = report.max_value_ratio <= limit && report.max_dmu_ratio <= limit;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub id: String,
    pub mu: f64,
    pub n_points: usize,
    pub max_rel_err: f64,
    pub worst_point: Vec<f64>,
}

/// Compares `grad_x` with central differences of `f~(., mu)` at `n_points`
/// uniform points of the search box. Step is `1e-6 max(1, |x_l|)`; the error is
/// `|g - g_fd|_inf / max(|g_fd|_inf, 1)`.
pub fn check_gradient(spec: &ObjectiveSpec, n_points: usize, mu: f64, seed: u64) -> GradientCheck {
    let obj = spec.objective.as_ref();
    let d = obj.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut worst = (0.0, vec![0.0; d]);
    for _ in 0..n_points {
        spec.bounds.sample(&mut rng, &mut x);
        obj.grad_x(&x, mu, &mut g);
        let mut err: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for l in 0..d {
            let h = 1e-6 * x[l].abs().max(1.0);
            let orig = x[l];
            x[l] = orig + h;
            let up = obj.smoothed(&x, mu);
            x[l] = orig - h;
            let down = obj.smoothed(&x, mu);
            x[l] = orig;
            let fd = (up - down) / (2.0 * h);
            err = err.max((g[l] - fd).abs());
            scale = scale.max(fd.abs());
        }
        let rel = err / scale;
        if rel > worst.0 {
            worst = (rel, x.clone());
        }
    }
    GradientCheck {
        id: spec.id.clone(),
        mu,
        n_points,
        max_rel_err: worst.0,
        worst_point: worst.1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{build_benchmark, build_example1, BenchmarkId, SmootherKind};

    #[test]
    fn example1_logexp_passes_in_one_dim() {
        let spec = build_example1(1, SmootherKind::LogExp).unwrap();
        assert!((spec.constants.kappa - 0.1 * 4f64.ln()).abs() < 1e-15);
        let r = certify_constants(&spec, 401, &[1.0, 0.1, 0.01, 1e-3]).unwrap();
        assert!(r.passed, "{r:?}");
        // the worst case sits at the kink and is exactly the declared constant
        assert!((r.max_dmu_ratio - spec.constants.kappa).abs() < 1e-12);
    }

    #[test]
    fn loosened_kappa_still_passes() {
        let mut spec = build_benchmark(BenchmarkId::F3, 2, SmootherKind::LogExp).unwrap();
        spec.constants.kappa *= 10.0;
        assert!(certify_constants(&spec, 51, &[0.1, 0.01]).unwrap().passed);
    }

    #[test]
    fn sqrt_smoother_worst_case_at_kink() {
        // two terms of weight 1/10, each off by exactly 2 mu at s = 0
        let mut spec = build_example1(2, SmootherKind::Sqrt).unwrap();
        assert!((spec.constants.kappa - 0.4).abs() < 1e-15);
        let r = certify_constants(&spec, 41, &[0.5, 0.05]).unwrap();
        assert!(r.passed);
        assert!((r.max_value_ratio - 0.4).abs() < 1e-12, "{}", r.max_value_ratio);
        assert!(r.worst_value_point.iter().all(|&v| v == 0.0));
        spec.constants.kappa = 0.39;
        assert!(!certify_constants(&spec, 41, &[0.5, 0.05]).unwrap().passed);
    }

    #[test]
    fn rejects_mu_outside_range() {
        let spec = build_example1(1, SmootherKind::LogExp).unwrap();
        assert!(certify_constants(&spec, 11, &[2.0]).is_err());
        assert!(certify_constants(&spec, 11, &[0.0]).is_err());
        assert!(certify_constants(&spec, 11, &[]).is_err());
    }

    #[test]
    fn smoothing_converges_as_mu_halves() {
        for id in BenchmarkId::ALL {
            let spec = build_benchmark(id, 2, SmootherKind::LogExp).unwrap();
            spec.bounds.for_each_grid_point(11, |x| {
                let fx = spec.value(x);
                let gaps: Vec<f64> =
                    (1..=30).map(|k| (spec.smoothed(x, 0.5f64.powi(k)) - fx).abs()).collect();
                assert!(gaps[29] < 1e-4, "{id} {x:?} {}", gaps[29]);
                assert!(gaps[29] <= gaps[0] + 1e-15);
            });
        }
    }
}
