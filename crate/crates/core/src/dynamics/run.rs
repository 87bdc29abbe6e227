use serde::{Deserialize, Serialize};
use std::time::Instant;

use super::noise::init_rng;
use super::{consensus_from_energies, step_with, Ensemble, InitSpec, NoiseSource, SolverConfig, Stepper};
use crate::error::{Error, Result};
use crate::objective::{ObjectiveInfo, ObjectiveSpec, SearchBox};

/// Coordinates beyond this magnitude abort a run as divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e8;
/// Particles are expected to stay inside the objective box grown by this fraction.
pub const EXCURSION_MARGIN: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub diameter: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Excursion {
    pub bounds: SearchBox,
    /// First step index at which some particle was outside `bounds`.
    pub first_step: Option<u64>,
    pub max_abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub stepper: Stepper,
    pub config: SolverConfig,
    pub objective: ObjectiveInfo,
    /// Final consensus point.
    pub x_inf: Vec<f64>,
    pub f_x_inf: f64,
    /// `|f(x_inf) - f_min| / (f_max - f_min)`.
    pub normalized_gap: f64,
    pub success: bool,
    /// `|x_inf - x*|^2`.
    pub sol_err: f64,
    pub steps: u64,
    pub t_final: f64,
    /// The diameter fell below `consensus_tol` before the horizon.
    pub converged: bool,
    pub final_diameter: f64,
    pub diameter_trace: Vec<TracePoint>,
    pub excursion: Excursion,
    pub wall_time_s: f64,
}

impl RunReport {
    /// The report with wall time cleared, for bitwise comparisons.
    pub fn without_timing(mut self) -> Self {
        self.wall_time_s = 0.0;
        self
    }
}

pub fn initial_ensemble(cfg: &SolverConfig, objective: &ObjectiveSpec, init: &InitSpec) -> Result<Ensemble> {
    let (n, d) = (cfg.n_particles, cfg.dim);
    let mut rng = init_rng(cfg.seed);
    let positions = match init {
        InitSpec::Uniform { bounds, allow_outside } => {
            if bounds.dim != d {
                return Err(Error::DimensionMismatch { expected: d, got: bounds.dim });
            }
            if !allow_outside && !objective.bounds.contains_box(bounds) {
                return Err(Error::invalid("init", "initial box is not inside the objective's box"));
            }
            let mut p = vec![0.0; n * d];
            bounds.sample(&mut rng, &mut p);
            p
        }
        InitSpec::Gaussian { mean, std } => {
            if mean.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: mean.len() });
            }
            if !(std.is_finite() && *std >= 0.0) {
                return Err(Error::invalid("init.std", format!("got {std}")));
            }
            use rand::Rng;
            (0..n)
                .flat_map(|_| mean.iter().map(|&m| m + std * rng.sample::<f64, _>(rand_distr::StandardNormal)).collect::<Vec<_>>())
                .collect()
        }
        InitSpec::Points { positions } => {
            if positions.len() != n {
                return Err(Error::invalid("init.positions", format!("expected {n} rows, got {}", positions.len())));
            }
            if let Some(bad) = positions.iter().find(|r| r.len() != d) {
                return Err(Error::DimensionMismatch { expected: d, got: bad.len() });
            }
            positions.concat()
        }
    };
    Ensemble::new(positions, d, cfg.mu0)
}

/// Runs the smoothing scheme from a seeded initial ensemble until consensus or the horizon.
pub fn run(cfg: &SolverConfig, objective: &ObjectiveSpec, init: &InitSpec) -> Result<RunReport> {
    run_with(Stepper::Scbo, cfg, objective, init)
}

pub fn run_with(
    stepper: Stepper,
    cfg: &SolverConfig,
    objective: &ObjectiveSpec,
    init: &InitSpec,
) -> Result<RunReport> {
    cfg.validate()?;
    if cfg.dim != objective.dim() {
        return Err(Error::DimensionMismatch { expected: objective.dim(), got: cfg.dim });
    }
    let started = Instant::now();
    let mut ens = initial_ensemble(cfg, objective, init)?;
    let mut noise = NoiseSource::new(cfg.seed, cfg.noise_mode);
    let obj = objective.objective.as_ref();
    let max_steps = cfg.max_steps();

    let bounds = objective.bounds.with_margin(EXCURSION_MARGIN);
    let mut excursion = Excursion { bounds, first_step: None, max_abs: ens.max_abs() };
    let note_excursion = |ens: &Ensemble, excursion: &mut Excursion| {
        excursion.max_abs = excursion.max_abs.max(ens.max_abs());
        if excursion.first_step.is_none() && ens.particles().any(|x| !bounds.contains(x)) {
            excursion.first_step = Some(ens.step_index);
        }
    };
    note_excursion(&ens, &mut excursion);

    let mut diameter = ens.diameter();
    let mut trace = vec![TracePoint { t: 0.0, diameter }];
    while diameter >= cfg.consensus_tol && ens.step_index < max_steps {
        step_with(stepper, &mut ens, cfg, &mut noise, obj)?;
        let magnitude = ens.max_abs();
        if magnitude > DIVERGENCE_LIMIT {
            return Err(Error::Divergence { step: ens.step_index, magnitude, limit: DIVERGENCE_LIMIT });
        }
        note_excursion(&ens, &mut excursion);
        if ens.step_index % cfg.trace_every == 0 || ens.step_index == max_steps {
            diameter = ens.diameter();
            trace.push(TracePoint { t: ens.t, diameter });
        }
    }

    let mut energies = Vec::with_capacity(ens.n_particles());
    stepper.energies(&ens, obj, &mut energies);
    let x_inf = consensus_from_energies(&ens, cfg.beta, &energies)?;
    let f_x_inf = objective.value(&x_inf);
    let normalized_gap = objective.normalized_gap(f_x_inf);
    let sol_err = x_inf.iter().zip(&objective.x_star).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(RunReport {
        stepper,
        config: cfg.clone(),
        objective: objective.info(),
        x_inf,
        f_x_inf,
        normalized_gap,
        success: normalized_gap < cfg.success_threshold,
        sol_err,
        steps: ens.step_index,
        t_final: ens.t,
        converged: diameter < cfg.consensus_tol,
        final_diameter: diameter,
        diameter_trace: trace,
        excursion,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}
