//! Seeded Monte Carlo sweeps over particle number or `beta`, and SCBO/CBO comparisons.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{run_with, InitSpec, RunReport, SolverConfig, Stepper};
use crate::error::{Error, Result};
use crate::objective::{build_by_name, ObjectiveSpec, SmootherKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VaryParam {
    N,
    Beta,
}

impl VaryParam {
    pub fn as_str(self) -> &'static str {
        match self {
            VaryParam::N => "n",
            VaryParam::Beta => "beta",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub objective_ids: Vec<String>,
    pub dim: usize,
    #[serde(default = "default_smoother")]
    pub smoother: SmootherKind,
    pub vary: VaryParam,
    pub values: Vec<f64>,
    /// Template for every run; `n_particles` or `beta` is overwritten per cell,
    /// `dim` by the spec and `seed` per run.
    pub fixed: SolverConfig,
    pub runs_per_cell: usize,
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
    #[serde(default)]
    pub base_seed: u64,
}

fn default_smoother() -> SmootherKind {
    SmootherKind::LogExp
}

fn default_threshold() -> f64 {
    0.005
}

/// Default horizon for sweeps.
pub const SWEEP_T_MAX: f64 = 15.0;

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.objective_ids.is_empty() {
            return Err(Error::invalid("objective_ids", "must not be empty"));
        }
        if self.values.is_empty() {
            return Err(Error::invalid("values", "must not be empty"));
        }
        if self.runs_per_cell == 0 {
            return Err(Error::invalid("runs_per_cell", "must be at least 1"));
        }
        if !(self.success_threshold > 0.0) {
            return Err(Error::invalid("success_threshold", "must be positive"));
        }
        for &v in &self.values {
            let ok = match self.vary {
                VaryParam::N => v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64,
                VaryParam::Beta => v.is_finite() && v >= 0.0,
            };
            if !ok {
                return Err(Error::invalid("values", format!("{v} is not a valid {}", self.vary.as_str())));
            }
        }
        for v in &self.values {
            self.cell_config(*v).validate()?;
        }
        Ok(())
    }

    pub fn cell_config(&self, value: f64) -> SolverConfig {
        let mut cfg = SolverConfig { dim: self.dim, success_threshold: self.success_threshold, ..self.fixed.clone() };
        match self.vary {
            VaryParam::N => cfg.n_particles = value as usize,
            VaryParam::Beta => cfg.beta = value,
        }
        cfg
    }
}

/// Seed of run `run` for `objective`. The varied value is not hashed, so every
/// cell of a row sees the same initial ensembles and noise.
pub fn run_seed(base_seed: u64, objective: &str, run: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(base_seed.to_le_bytes());
    h.update((objective.len() as u64).to_le_bytes());
    h.update(objective.as_bytes());
    h.update((run as u64).to_le_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("digest has 32 bytes"))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of the report's JSON with wall time removed.
pub fn report_digest(report: &RunReport) -> Result<String> {
    let json = serde_json::to_vec(&report.clone().without_timing())?;
    Ok(hex(&Sha256::digest(&json)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunDigest {
    pub run: usize,
    pub seed: u64,
    pub success: bool,
    pub diverged: bool,
    pub f_x_inf: Option<f64>,
    pub sol_err: Option<f64>,
    pub steps: Option<u64>,
    pub converged: bool,
    pub error: Option<String>,
    pub report_sha256: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub objective: String,
    pub stepper: Stepper,
    pub param: VaryParam,
    pub value: f64,
    pub runs: usize,
    pub n_success: usize,
    pub n_diverged: usize,
    /// `n_success / runs`
    pub rate: f64,
    /// Binomial standard error of `rate`.
    pub rate_se: f64,
    /// Mean `|x_inf - x*|^2` over runs that finished.
    pub sol_err: f64,
    /// Mean `f(x_inf)` over runs that finished.
    pub fun_val: f64,
    pub per_run: Vec<RunDigest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub spec: SweepSpec,
    pub stepper: Stepper,
    pub t_max: f64,
    pub consensus_tol: f64,
    pub h: f64,
    pub cells: Vec<CellResult>,
}

fn digest_run(run: usize, seed: u64, outcome: Result<RunReport>) -> Result<RunDigest> {
    Ok(match outcome {
        Ok(r) => RunDigest {
            run,
            seed,
            success: r.success,
            diverged: false,
            f_x_inf: Some(r.f_x_inf),
            sol_err: Some(r.sol_err),
            steps: Some(r.steps),
            converged: r.converged,
            error: None,
            report_sha256: Some(report_digest(&r)?),
        },
        Err(e @ (Error::Divergence { .. } | Error::NonFiniteStep { .. } | Error::NonFiniteEnergy { .. })) => RunDigest {
            run,
            seed,
            success: false,
            diverged: true,
            f_x_inf: None,
            sol_err: None,
            steps: None,
            converged: false,
            error: Some(e.to_string()),
            report_sha256: None,
        },
        Err(e) => return Err(e),
    })
}

fn summarize(objective: &str, stepper: Stepper, param: VaryParam, value: f64, per_run: Vec<RunDigest>) -> CellResult {
    let runs = per_run.len();
    let n_success = per_run.iter().filter(|d| d.success).count();
    let n_diverged = per_run.iter().filter(|d| d.diverged).count();
    let finished: Vec<&RunDigest> = per_run.iter().filter(|d| !d.diverged).collect();
    let mean = |get: fn(&RunDigest) -> Option<f64>| {
        if finished.is_empty() {
            f64::NAN
        } else {
            finished.iter().filter_map(|d| get(d)).sum::<f64>() / finished.len() as f64
        }
    };
    let rate = n_success as f64 / runs as f64;
    CellResult {
        objective: objective.to_string(),
        stepper,
        param,
        value,
        runs,
        n_success,
        n_diverged,
        rate,
        rate_se: (rate * (1.0 - rate) / runs as f64).sqrt(),
        sol_err: mean(|d| d.sol_err),
        fun_val: mean(|d| d.f_x_inf),
        per_run,
    }
}

fn resolve_objectives(spec: &SweepSpec, smoother: SmootherKind) -> Result<Vec<ObjectiveSpec>> {
    spec.objective_ids.iter().map(|id| build_by_name(id, spec.dim, smoother)).collect()
}

fn sweep_cells(spec: &SweepSpec, stepper: Stepper, objectives: &[ObjectiveSpec]) -> Result<Vec<CellResult>> {
    let jobs: Vec<(usize, usize, usize)> = (0..objectives.len())
        .flat_map(|o| (0..spec.values.len()).flat_map(move |v| (0..spec.runs_per_cell).map(move |r| (o, v, r))))
        .collect();
    let digests: Vec<RunDigest> = jobs
        .par_iter()
        .map(|&(o, v, r)| {
            let obj = &objectives[o];
            let seed = run_seed(spec.base_seed, &spec.objective_ids[o], r);
            let cfg = SolverConfig { seed, ..spec.cell_config(spec.values[v]) };
            digest_run(r, seed, run_with(stepper, &cfg, obj, &InitSpec::uniform(obj.bounds)))
        })
        .collect::<Result<_>>()?;
    let mut it = digests.into_iter();
    let mut cells = Vec::with_capacity(objectives.len() * spec.values.len());
    for id in &spec.objective_ids {
        for &value in &spec.values {
            let per_run: Vec<RunDigest> = it.by_ref().take(spec.runs_per_cell).collect();
            cells.push(summarize(id, stepper, spec.vary, value, per_run));
        }
    }
    Ok(cells)
}

/// Runs `runs_per_cell` seeded SCBO runs for every (objective, value) cell.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let objectives = resolve_objectives(spec, spec.smoother)?;
    Ok(SweepTable {
        spec: spec.clone(),
        stepper: Stepper::Scbo,
        t_max: spec.fixed.t_max,
        consensus_tol: spec.fixed.consensus_tol,
        h: spec.fixed.h,
        cells: sweep_cells(spec, Stepper::Scbo, &objectives)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub objective: String,
    pub param: VaryParam,
    pub value: f64,
    pub scbo: CellResult,
    pub cbo: CellResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub spec: SweepSpec,
    pub t_max: f64,
    pub consensus_tol: f64,
    pub h: f64,
    pub rows: Vec<ComparisonRow>,
}

/// SCBO and CBO on identical seeds per cell. CBO weights use the raw objective.
pub fn run_comparison(spec: &SweepSpec) -> Result<ComparisonTable> {
    spec.validate()?;
    let objectives = resolve_objectives(spec, spec.smoother)?;
    let scbo = sweep_cells(spec, Stepper::Scbo, &objectives)?;
    let cbo = sweep_cells(spec, Stepper::Cbo, &objectives)?;
    let rows = scbo
        .into_iter()
        .zip(cbo)
        .map(|(s, c)| ComparisonRow { objective: s.objective.clone(), param: s.param, value: s.value, scbo: s, cbo: c })
        .collect();
    Ok(ComparisonTable {
        spec: spec.clone(),
        t_max: spec.fixed.t_max,
        consensus_tol: spec.fixed.consensus_tol,
        h: spec.fixed.h,
        rows,
    })
}

pub const SWEEP_CSV_HEADER: [&str; 11] =
    ["objective", "stepper", "param", "value", "runs", "rate", "rate_se", "fun-val", "sol-err", "n_success", "n_diverged"];

fn cell_fields(c: &CellResult) -> Vec<String> {
    vec![
        c.rate.to_string(),
        c.rate_se.to_string(),
        c.fun_val.to_string(),
        c.sol_err.to_string(),
        c.n_success.to_string(),
        c.n_diverged.to_string(),
    ]
}

pub fn write_sweep_csv<W: Write>(table: &SweepTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_CSV_HEADER)?;
    for c in &table.cells {
        let mut rec = vec![
            c.objective.clone(),
            c.stepper.as_str().to_string(),
            c.param.as_str().to_string(),
            c.value.to_string(),
            c.runs.to_string(),
        ];
        rec.extend(cell_fields(c));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub const COMPARISON_CSV_HEADER: [&str; 16] = [
    "objective",
    "param",
    "value",
    "runs",
    "scbo_rate",
    "scbo_rate_se",
    "scbo_fun-val",
    "scbo_sol-err",
    "scbo_n_success",
    "scbo_n_diverged",
    "cbo_rate",
    "cbo_rate_se",
    "cbo_fun-val",
    "cbo_sol-err",
    "cbo_n_success",
    "cbo_n_diverged",
];

pub fn write_comparison_csv<W: Write>(table: &ComparisonTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COMPARISON_CSV_HEADER)?;
    for r in &table.rows {
        let mut rec = vec![r.objective.clone(), r.param.as_str().to_string(), r.value.to_string(), r.scbo.runs.to_string()];
        rec.extend(cell_fields(&r.scbo));
        rec.extend(cell_fields(&r.cbo));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(ids: &[&str], vary: VaryParam, values: &[f64], runs: usize) -> SweepSpec {
        SweepSpec {
            objective_ids: ids.iter().map(|s| s.to_string()).collect(),
            dim: 2,
            smoother: SmootherKind::LogExp,
            vary,
            values: values.to_vec(),
            fixed: SolverConfig { n_particles: 30, beta: 50.0, t_max: 3.0, ..Default::default() },
            runs_per_cell: runs,
            success_threshold: 0.005,
            base_seed: 7,
        }
    }

    #[test]
    fn seeds_are_stable_and_distinct() {
        assert_eq!(run_seed(1, "f1", 0), run_seed(1, "f1", 0));
        assert_ne!(run_seed(1, "f1", 0), run_seed(1, "f1", 1));
        assert_ne!(run_seed(1, "f1", 0), run_seed(1, "f2", 0));
        assert_ne!(run_seed(1, "f1", 0), run_seed(2, "f1", 0));
    }

    #[test]
    fn validation() {
        assert!(spec(&["f1"], VaryParam::N, &[], 1).validate().is_err());
        assert!(spec(&["f1"], VaryParam::N, &[2.5], 1).validate().is_err());
        assert!(spec(&["f1"], VaryParam::N, &[10.0], 0).validate().is_err());
        assert!(spec(&[], VaryParam::N, &[10.0], 1).validate().is_err());
        assert!(run_sweep(&spec(&["nope"], VaryParam::N, &[10.0], 1)).is_err());
    }

    #[test]
    fn sweep_is_reproducible_and_ordered() {
        let s = spec(&["f1", "f2"], VaryParam::N, &[10.0, 20.0], 3);
        let a = run_sweep(&s).unwrap();
        let b = run_sweep(&s).unwrap();
        assert_eq!(a, b);
        let coords: Vec<(&str, f64)> = a.cells.iter().map(|c| (c.objective.as_str(), c.value)).collect();
        assert_eq!(coords, vec![("f1", 10.0), ("f1", 20.0), ("f2", 10.0), ("f2", 20.0)]);
        for c in &a.cells {
            assert_eq!(c.rate, c.n_success as f64 / 3.0);
            assert!(c.sol_err >= 0.0 && c.fun_val >= 0.0);
        }
    }

    #[test]
    fn adding_cells_leaves_existing_cells_unchanged() {
        let small = run_sweep(&spec(&["f1"], VaryParam::Beta, &[10.0], 2)).unwrap();
        let big = run_sweep(&spec(&["f2", "f1"], VaryParam::Beta, &[5.0, 10.0], 2)).unwrap();
        let cell = big.cells.iter().find(|c| c.objective == "f1" && c.value == 10.0).unwrap();
        assert_eq!(cell, &small.cells[0]);
    }

    #[test]
    fn csv_has_documented_columns() {
        let t = run_sweep(&spec(&["f1"], VaryParam::N, &[10.0], 1)).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        for col in ["rate", "fun-val", "sol-err"] {
            assert!(header.split(',').any(|h| h == col), "{header}");
        }
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn comparison_pairs_cells() {
        let t = run_comparison(&spec(&["f2"], VaryParam::N, &[10.0], 2)).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].scbo.stepper, Stepper::Scbo);
        assert_eq!(t.rows[0].cbo.stepper, Stepper::Cbo);
        let seeds = |c: &CellResult| c.per_run.iter().map(|d| d.seed).collect::<Vec<_>>();
        assert_eq!(seeds(&t.rows[0].scbo), seeds(&t.rows[0].cbo));
    }
}
