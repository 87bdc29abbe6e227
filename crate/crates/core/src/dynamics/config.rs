use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::SearchBox;

/// How the per-step Gaussian vector is shared.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// One `d`-vector per step, shared by every particle.
    #[default]
    Common,
    /// One `d`-vector per particle per step. Not covered by the consensus theory.
    Independent,
}

/// Scalars of one solver run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Drift rate toward the consensus point.
    pub lambda: f64,
    /// Noise intensity.
    pub sigma: f64,
    /// Gibbs weight exponent.
    pub beta: f64,
    pub n_particles: usize,
    pub dim: usize,
    /// Time step.
    pub h: f64,
    /// Horizon.
    pub t_max: f64,
    /// Initial smoothing parameter; the schedule is `mu0 exp(-alpha t)`.
    pub mu0: f64,
    pub alpha: f64,
    pub noise_mode: NoiseMode,
    pub seed: u64,
    /// Stop once the ensemble diameter drops below this.
    pub consensus_tol: f64,
    /// Diameter is sampled (and the stopping rule checked) every this many steps.
    pub trace_every: u64,
    /// Threshold on the normalized objective gap that counts as success.
    pub success_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda: 1.0,
            sigma: 1.0,
            beta: 50.0,
            n_particles: 100,
            dim: 2,
            h: 0.01,
            t_max: 20.0,
            mu0: 1.0,
            alpha: 0.9,
            noise_mode: NoiseMode::Common,
            seed: 0,
            consensus_tol: 1e-8,
            trace_every: 10,
            success_threshold: 0.005,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be positive and finite, got {v}")))
            }
        }
        fn non_negative(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be non-negative and finite, got {v}")))
            }
        }
        positive("lambda", self.lambda)?;
        non_negative("sigma", self.sigma)?;
        non_negative("beta", self.beta)?;
        positive("h", self.h)?;
        positive("t_max", self.t_max)?;
        positive("mu0", self.mu0)?;
        positive("alpha", self.alpha)?;
        positive("consensus_tol", self.consensus_tol)?;
        positive("success_threshold", self.success_threshold)?;
        if self.n_particles == 0 {
            return Err(Error::invalid("n_particles", "must be at least 1"));
        }
        if self.dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if self.trace_every == 0 {
            return Err(Error::invalid("trace_every", "must be at least 1"));
        }
        Ok(())
    }

    /// `2 lambda > sigma^2`, under which pairwise differences vanish in mean square.
    pub fn assumption1_holds(&self) -> bool {
        2.0 * self.lambda > self.sigma * self.sigma
    }

    pub fn mu_at(&self, t: f64) -> f64 {
        self.mu0 * (-self.alpha * t).exp()
    }

    /// Number of steps needed to reach `t_max`.
    pub fn max_steps(&self) -> u64 {
        (self.t_max / self.h - 1e-9).ceil() as u64
    }

    /// Per-step factor of `E[(x^i_l - x^j_l)^2]` under the two-step scheme.
    pub fn discrete_decay_factor(&self) -> f64 {
        (-2.0 * self.lambda * self.h).exp() * (1.0 + self.sigma * self.sigma * self.h)
    }
}

/// Initial particle distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitSpec {
    /// Uniform on a box. Must lie inside the objective's box unless `allow_outside`.
    Uniform {
        bounds: SearchBox,
        #[serde(default)]
        allow_outside: bool,
    },
    /// Independent normal coordinates.
    Gaussian { mean: Vec<f64>, std: f64 },
    /// Explicit positions, one row per particle.
    Points { positions: Vec<Vec<f64>> },
}

impl InitSpec {
    pub fn uniform(bounds: SearchBox) -> Self {
        InitSpec::Uniform { bounds, allow_outside: false }
    }
}
