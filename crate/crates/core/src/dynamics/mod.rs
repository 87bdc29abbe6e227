//! Particle dynamics: consensus point, the two-step stepper and full runs.

mod config;
mod ensemble;
mod noise;
mod run;
mod step;

pub use config::{InitSpec, NoiseMode, SolverConfig};
pub use ensemble::Ensemble;
pub use noise::NoiseSource;
pub use run::{initial_ensemble, run, run_with, Excursion, RunReport, TracePoint, DIVERGENCE_LIMIT, EXCURSION_MARGIN};
pub use step::{cbo_step, consensus_from_energies, consensus_point, dscbo_step, step_with, two_step_update, Stepper};
