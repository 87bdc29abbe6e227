//! Sufficient parameter condition for the global error estimate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::laplace::{laplace_from_values, sample_values};
use super::montecarlo::{block_rng, log_mean_exp, Estimate};
use crate::error::{Error, Result};
use crate::objective::{ObjectiveSpec, SearchBox};

/// `mu0^(-q-1) / (2 lambda - sigma^2 - (q+1) alpha)`, the supremum over `t` of
/// `int_0^t exp(-(2 lambda - sigma^2) s) mu(s)^(-q-1) ds` for `mu(s) = mu0 exp(-alpha s)`.
pub fn gamma_bound(lambda: f64, sigma: f64, alpha: f64, q: f64, mu0: f64) -> Result<f64> {
    if !(mu0.is_finite() && mu0 > 0.0) {
        return Err(Error::invalid("mu0", format!("must be positive, got {mu0}")));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::invalid("alpha", format!("must be nonnegative, got {alpha}")));
    }
    if !(0.0..1.0).contains(&q) {
        return Err(Error::invalid("q", format!("must lie in [0, 1), got {q}")));
    }
    let rate = 2.0 * lambda - sigma * sigma - (q + 1.0) * alpha;
    if !(rate > 0.0) {
        return Err(Error::invalid(
            "alpha",
            format!("(q+1) alpha must be below 2 lambda - sigma^2; the integral diverges (rate {rate})"),
        ));
    }
    Ok(mu0.powf(-q - 1.0) / rate)
}

/// Slack `epsilon` for a target error `delta`:
/// `exp(-2a - beta delta) / (a/(1-q) + exp(-a - beta delta))` with `a = mu0^(1-q) beta kappa`.
pub fn epsilon_for_delta(beta: f64, mu0: f64, kappa: f64, q: f64, delta: f64) -> f64 {
    let a = mu0.powf(1.0 - q) * beta * kappa;
    (-2.0 * a - beta * delta).exp() / (a / (1.0 - q) + (-a - beta * delta).exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionInput {
    pub beta: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub mu0: f64,
    pub kappa: f64,
    pub eta: f64,
    pub q: f64,
    /// Defaults to `mu0`.
    pub mu_bar: Option<f64>,
    /// Defaults to [`gamma_bound`].
    pub gamma: Option<f64>,
    /// Defaults to [`epsilon_for_delta`] when `delta` is set.
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub f_min: f64,
    /// `f(x^in)` for i.i.d. draws of the initial law.
    pub f_samples: Vec<f64>,
    /// `sum_l max_i (x^i_l - xbar_l)^2` for i.i.d. initial ensembles.
    pub spread_samples: Vec<f64>,
}

/// System parameters for [`ConditionInput::sample`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionParams {
    pub beta: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub mu0: f64,
    pub gamma: Option<f64>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
}

/// `sum_l max_i (x^i_l - xbar_l)^2` for a row-major `n x dim` ensemble.
pub fn max_spread(positions: &[f64], dim: usize) -> f64 {
    let n = positions.len() / dim;
    (0..dim)
        .map(|l| {
            let column = positions.iter().skip(l).step_by(dim);
            let mean = column.clone().sum::<f64>() / n as f64;
            column.map(|x| (x - mean) * (x - mean)).fold(0.0, f64::max)
        })
        .sum()
}

impl ConditionInput {
    /// Draws `m` points and `m` ensembles of `n_particles` uniformly from `init`.
    pub fn sample(
        objective: &ObjectiveSpec,
        params: ConditionParams,
        init: &SearchBox,
        n_particles: usize,
        m: usize,
        seed: u64,
    ) -> Result<Self> {
        if n_particles == 0 {
            return Err(Error::invalid("n_particles", "must be positive"));
        }
        let f_samples = sample_values(objective, init, m, seed)?;
        let d = init.dim;
        let spread_samples = (0..m as u64)
            .into_par_iter()
            .map(|k| {
                let mut rng = block_rng(seed ^ 0x5EED_0F_E75E_4B1E, k);
                let mut x = vec![0.0; n_particles * d];
                init.sample(&mut rng, &mut x);
                max_spread(&x, d)
            })
            .collect();
        let c = objective.constants;
        Ok(ConditionInput {
            beta: params.beta,
            lambda: params.lambda,
            sigma: params.sigma,
            alpha: params.alpha,
            mu0: params.mu0,
            kappa: c.kappa,
            eta: c.eta,
            q: c.q,
            mu_bar: None,
            gamma: params.gamma,
            epsilon: params.epsilon,
            delta: params.delta,
            f_min: objective.f_min,
            f_samples,
            spread_samples,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub beta: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub mu_bar: f64,
    pub f_tilde_min: f64,
    /// `exp(-mu0^(1-q) beta kappa) - epsilon`
    pub lhs_prefactor: f64,
    /// `E[exp(beta (f~_min - f(x^in)))]`
    pub lhs_expectation: Estimate,
    pub lhs: f64,
    pub lhs_std_err: f64,
    /// `mu0^(1-q) beta kappa / (1-q)`
    pub rhs_smoothing_term: f64,
    /// `sum_l E[max_i (x^i_l(0) - xbar_l(0))^2]`
    pub spread_expectation: Estimate,
    /// `gamma (2 lambda + sigma^2) eta beta * spread`
    pub rhs_spread_term: f64,
    pub rhs: f64,
    pub rhs_std_err: f64,
    pub satisfied: bool,
    /// Holds after moving both sides against it by two standard errors.
    pub satisfied_with_margin: bool,
    /// `-(1/beta) ln E[exp(-beta f(x^in))]`
    pub laplace_term: f64,
    /// `laplace_term - f_min - (1/beta) ln epsilon`
    pub error_bound: f64,
    pub n_f_samples: usize,
    pub n_spread_samples: usize,
}

pub fn check_condition(ci: &ConditionInput) -> Result<ConditionReport> {
    let ConditionInput { beta, lambda, sigma, mu0, kappa, eta, q, .. } = *ci;
    for (name, v) in [("beta", beta), ("mu0", mu0), ("kappa", kappa), ("eta", eta)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(name, format!("must be positive, got {v}")));
        }
    }
    if !(0.0..1.0).contains(&q) {
        return Err(Error::invalid("q", format!("must lie in [0, 1), got {q}")));
    }
    if !(2.0 * lambda > sigma * sigma) {
        return Err(Error::invalid("sigma", "requires 2 lambda > sigma^2"));
    }
    if ci.f_samples.is_empty() || ci.spread_samples.is_empty() {
        return Err(Error::invalid("samples", "need at least one draw of each kind"));
    }
    let a = mu0.powf(1.0 - q) * beta * kappa;
    let epsilon = match (ci.epsilon, ci.delta) {
        (Some(e), _) => e,
        (None, Some(delta)) => epsilon_for_delta(beta, mu0, kappa, q, delta),
        (None, None) => return Err(Error::invalid("epsilon", "give epsilon or a target delta")),
    };
    let upper = (-a).exp();
    if !(epsilon > 0.0 && epsilon < upper) {
        return Err(Error::invalid("epsilon", format!("must lie in (0, {upper}), got {epsilon}")));
    }
    let gamma = match ci.gamma {
        Some(g) => g,
        None => gamma_bound(lambda, sigma, ci.alpha, q, mu0)?,
    };
    let mu_bar = ci.mu_bar.unwrap_or(mu0);
    let f_tilde_min = ci.f_min - kappa * mu_bar.powf(1.0 - q);

    let exponents: Vec<f64> = ci.f_samples.iter().map(|f| beta * (f_tilde_min - f)).collect();
    let log_mean = log_mean_exp(&exponents);
    let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = exponents.iter().map(|v| (v - top).exp()).collect();
    let rel = Estimate::from_samples(&scaled);
    let expectation = log_mean.exp();
    let lhs_expectation = Estimate { mean: expectation, std_err: expectation * rel.std_err / rel.mean };
    let lhs_prefactor = upper - epsilon;
    let lhs = lhs_prefactor * expectation;
    let lhs_std_err = lhs_prefactor.abs() * lhs_expectation.std_err;

    let spread_expectation = Estimate::from_samples(&ci.spread_samples);
    let spread_coeff = gamma * (2.0 * lambda + sigma * sigma) * eta * beta;
    let rhs_smoothing_term = a / (1.0 - q);
    let rhs_spread_term = spread_coeff * spread_expectation.mean;
    let rhs = rhs_smoothing_term + rhs_spread_term;
    let rhs_std_err = spread_coeff * spread_expectation.std_err;

    let laplace_term = laplace_from_values(&ci.f_samples, beta).value;
    Ok(ConditionReport {
        beta,
        epsilon,
        gamma,
        mu_bar,
        f_tilde_min,
        lhs_prefactor,
        lhs_expectation,
        lhs,
        lhs_std_err,
        rhs_smoothing_term,
        spread_expectation,
        rhs_spread_term,
        rhs,
        rhs_std_err,
        satisfied: lhs >= rhs,
        satisfied_with_margin: lhs - 2.0 * lhs_std_err >= rhs + 2.0 * rhs_std_err,
        laplace_term,
        error_bound: laplace_term - ci.f_min - epsilon.ln() / beta,
        n_f_samples: ci.f_samples.len(),
        n_spread_samples: ci.spread_samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{build_example1, SmootherKind};
    use proptest::prelude::*;

    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            let half = (tol / 2.0).max(1e-15 * whole.abs());
            rec(f, a, m, fa, flm, fm, left, half, depth - 1) + rec(f, m, b, fm, frm, fb, right, half, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 30)
    }

    #[test]
    fn gamma_closed_form() {
        assert!((gamma_bound(1.0, 1.0, 0.1, 0.0, 1.0).unwrap() - 1.0 / 0.9).abs() < 1e-15);
        assert!((gamma_bound(1.0, 1.0, 0.0, 0.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((gamma_bound(1.0, 1.0, 0.1, 0.0, 0.5).unwrap() - 2.2222222222222222).abs() < 1e-15);
        assert!(gamma_bound(1.0, 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(gamma_bound(1.0, 1.0, 0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn gamma_matches_quadrature() {
        for &(lambda, sigma, alpha, q, mu0) in
            &[(1.0, 1.0, 0.1, 0.0, 1.0), (0.1, 0.3, 0.1, 0.0, 5e-4), (2.0, 0.5, 0.7, 0.5, 0.05), (1.0, 0.0, 0.0, 0.3, 2.0)]
        {
            let g = gamma_bound(lambda, sigma, alpha, q, mu0).unwrap();
            let rate: f64 = 2.0 * lambda - sigma * sigma;
            let integrand = |s: f64| mu0.powf(-q - 1.0) * (-rate * s + (q + 1.0) * alpha * s).exp();
            let horizon = 80.0 / (rate - (q + 1.0) * alpha);
            let numeric = simpson(&integrand, 0.0, horizon, 1e-12 * g);
            assert!((numeric - g).abs() / g < 1e-8, "{numeric} {g}");
        }
    }

    fn example_input(beta: f64, epsilon: Option<f64>) -> ConditionInput {
        let spec = build_example1(1, SmootherKind::LogExp).unwrap();
        let params = ConditionParams {
            beta,
            lambda: 1.0,
            sigma: 1.0,
            alpha: 0.1,
            mu0: 5e-4,
            gamma: None,
            epsilon,
            delta: Some(0.01),
        };
        let init = SearchBox::symmetric(0.2, 1).unwrap();
        ConditionInput::sample(&spec, params, &init, 20, 2000, 1).unwrap()
    }

    #[test]
    fn small_beta_limit() {
        let r = check_condition(&example_input(1e-6, Some(0.1))).unwrap();
        assert!((r.lhs - 0.9).abs() < 1e-3, "{r:?}");
        assert!(r.rhs < 1e-3, "{r:?}");
        assert!(r.satisfied && r.satisfied_with_margin);
    }

    #[test]
    fn large_beta_fails() {
        let r = check_condition(&example_input(1e3, Some(0.1))).unwrap();
        assert!(!r.satisfied);
        assert!(r.lhs < r.rhs);
    }

    #[test]
    fn epsilon_from_delta_lies_in_interval() {
        let ci = example_input(2.0, None);
        let r = check_condition(&ci).unwrap();
        assert!(r.epsilon > 0.0 && r.epsilon < (-ci.mu0 * ci.beta * ci.kappa).exp());
        assert!(r.lhs_prefactor > 0.0);
    }

    #[test]
    fn rejects_epsilon_outside_interval() {
        assert!(check_condition(&example_input(1.0, Some(0.0))).is_err());
        assert!(check_condition(&example_input(1.0, Some(1.0))).is_err());
        let mut ci = example_input(1.0, None);
        ci.delta = None;
        assert!(check_condition(&ci).is_err());
    }

    #[test]
    fn report_serializes() {
        let r = check_condition(&example_input(1.0, Some(0.5))).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        for key in ["lhs", "rhs", "lhs_prefactor", "rhs_spread_term", "rhs_smoothing_term", "error_bound", "gamma"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn spread_of_known_ensemble() {
        // column means 1 and 0; max squared deviations 1 and 4
        let x = [0.0, -2.0, 2.0, 2.0, 1.0, 0.0];
        assert_eq!(max_spread(&x, 2), 5.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn monotone_in_epsilon(e1 in 1e-4f64..0.9, e2 in 1e-4f64..0.9, beta in 1e-3f64..5.0) {
            let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            let base = example_input(beta, None);
            let upper = (-base.mu0 * beta * base.kappa).exp();
            prop_assume!(hi < upper);
            let a = check_condition(&ConditionInput { epsilon: Some(lo), ..base.clone() }).unwrap();
            let b = check_condition(&ConditionInput { epsilon: Some(hi), ..base }).unwrap();
            prop_assert!(b.lhs <= a.lhs);
            prop_assert!(!b.satisfied || a.satisfied);
        }
    }
}
