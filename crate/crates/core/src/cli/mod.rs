//! Command-line front end: argument parsing, config documents and dispatch.

mod schema;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use schema::{
    Artifact, ConditionSection, DecaySection, Document, LaplaceSection, RunSection, SpgSection, SCHEMA_VERSION,
};

use crate::analysis::{
    check_condition, exact_pairwise_moment, laplace_estimate, verify_discrete_decay, ConditionInput, DecayProbe,
};
use crate::baseline::{spg_multistart, uniform_starts};
use crate::bench::{run_comparison, run_sweep, write_comparison_csv, write_sweep_csv};
use crate::dynamics::{run, run_with, InitSpec, SolverConfig};
use crate::error::{Error, Result};
use crate::objective::{build_by_name, SearchBox};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SCBO_OUT_DIR";

pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const UNKNOWN_BENCHMARK: i32 = 4;
    pub const OUTPUT: i32 = 5;
    pub const NUMERICAL: i32 = 6;
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidParameter { .. } | Error::DimensionMismatch { .. } | Error::NonFinite { .. } => {
            exit::CONFIG
        }
        Error::UnknownBenchmark(_) => exit::UNKNOWN_BENCHMARK,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => exit::OUTPUT,
        Error::Divergence { .. } | Error::NonFiniteEnergy { .. } | Error::NonFiniteStep { .. } => exit::NUMERICAL,
        Error::Invariant(_) => exit::FAILURE,
    }
}

#[derive(Debug, Parser)]
#[command(name = "scbo", version, about = "Smoothing consensus-based optimization experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Experiment document (TOML).
    #[arg(short, long)]
    pub config: PathBuf,
    /// Output directory for artifacts.
    #[arg(short, long, env = OUT_DIR_ENV, default_value = ".")]
    pub out: PathBuf,
    /// Replaces the seed carried by the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Print one line per run inside each cell.
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand, Clone)]
pub enum Command {
    /// Single optimization run.
    Run(Common),
    /// Success-rate sweep over N or beta.
    Sweep(Common),
    /// SCBO against CBO on shared seeds.
    Compare(Common),
    /// Evaluate the sufficient parameter condition.
    CheckCondition(Common),
    /// Pairwise second-moment decay, discrete and continuous.
    DecayProbe(Common),
    /// Laplace-principle estimates over beta.
    Laplace(Common),
    /// Smoothing gradient descent from uniform starts.
    SpgMultistart(Common),
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Run(c)
            | Command::Sweep(c)
            | Command::Compare(c)
            | Command::CheckCondition(c)
            | Command::DecayProbe(c)
            | Command::Laplace(c)
            | Command::SpgMultistart(c) => c,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Run(_) => "run",
            Command::Sweep(_) => "sweep",
            Command::Compare(_) => "compare",
            Command::CheckCondition(_) => "check-condition",
            Command::DecayProbe(_) => "decay-probe",
            Command::Laplace(_) => "laplace",
            Command::SpgMultistart(_) => "spg-multistart",
        }
    }
}

fn section<T>(s: Option<T>, name: &str) -> Result<T> {
    s.ok_or_else(|| Error::Config(format!("missing [{name}] section")))
}

fn checked_box(b: SearchBox) -> Result<SearchBox> {
    SearchBox::new(b.lo, b.hi, b.dim)
}

struct Output<'a> {
    dir: &'a Path,
    command: &'static str,
}

impl Output<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn json<C: Serialize, R: Serialize>(&self, name: &str, config: &C, result: &R) -> Result<PathBuf> {
        let art = Artifact { schema_version: SCHEMA_VERSION, command: self.command.to_string(), config, result };
        let path = self.path(name);
        fs::write(&path, serde_json::to_string_pretty(&art)?)?;
        Ok(path)
    }

    fn csv_rows(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<PathBuf> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        Ok(path)
    }
}

/// Reads the document, applies overrides and runs the subcommand. Returns the summary lines.
pub fn execute(cmd: &Command) -> Result<Vec<String>> {
    let common = cmd.common();
    let text = fs::read_to_string(&common.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", common.config.display())))?;
    let doc = Document::parse(&text)?;
    fs::create_dir_all(&common.out)?;
    let out = Output { dir: &common.out, command: cmd.name() };
    let verbose = common.verbose > 0;
    let seed = common.seed;
    match cmd {
        Command::Run(_) => cmd_run(doc, seed, &out),
        Command::Sweep(_) => cmd_sweep(doc, seed, &out, verbose),
        Command::Compare(_) => cmd_compare(doc, seed, &out, verbose),
        Command::CheckCondition(_) => cmd_condition(doc, seed, &out),
        Command::DecayProbe(_) => cmd_decay(doc, seed, &out),
        Command::Laplace(_) => cmd_laplace(doc, seed, &out),
        Command::SpgMultistart(_) => cmd_spg(doc, seed, &out),
    }
}

fn cmd_run(doc: Document, seed: Option<u64>, out: &Output) -> Result<Vec<String>> {
    let mut sec = section(doc.run, "run")?;
    if let Some(s) = seed {
        sec.solver.seed = s;
    }
    let spec = build_by_name(&sec.objective, sec.solver.dim, sec.smoother)?;
    let init = sec.init.get_or_insert(InitSpec::uniform(spec.bounds)).clone();
    let report = run_with(sec.stepper, &sec.solver, &spec, &init)?;
    let wall = report.wall_time_s;
    let report = report.without_timing();
    out.json("run.json", &sec, &report)?;
    out.csv_rows(
        "trace.csv",
        &["t", "diameter"],
        report.diameter_trace.iter().map(|p| vec![p.t.to_string(), p.diameter.to_string()]),
    )?;
    Ok(vec![format!(
        "run {} d={} N={} seed={}: f(x_inf)={:.3e} gap={:.3e} success={} converged={} t={:.2} steps={} ({wall:.2}s)",
        sec.objective,
        sec.solver.dim,
        sec.solver.n_particles,
        sec.solver.seed,
        report.f_x_inf,
        report.normalized_gap,
        report.success,
        report.converged,
        report.t_final,
        report.steps
    )])
}

fn cell_line(c: &crate::bench::CellResult) -> String {
    format!(
        "{} {} {}={}: rate={:.2} ({}/{}) fun-val={:.3e} sol-err={:.3e} diverged={}",
        c.stepper.as_str(),
        c.objective,
        c.param.as_str(),
        c.value,
        c.rate,
        c.n_success,
        c.runs,
        c.fun_val,
        c.sol_err,
        c.n_diverged
    )
}

fn run_lines(c: &crate::bench::CellResult) -> Vec<String> {
    c.per_run
        .iter()
        .map(|d| {
            format!(
                "  run {} seed={} success={} f={} steps={}",
                d.run,
                d.seed,
                d.success,
                d.f_x_inf.map_or("-".into(), |f| format!("{f:.3e}")),
                d.steps.map_or("-".into(), |s| s.to_string())
            )
        })
        .collect()
}

fn cmd_sweep(doc: Document, seed: Option<u64>, out: &Output, verbose: bool) -> Result<Vec<String>> {
    let mut spec = section(doc.sweep, "sweep")?;
    if let Some(s) = seed {
        spec.base_seed = s;
    }
    let table = run_sweep(&spec)?;
    out.json("sweep.json", &spec, &table)?;
    write_sweep_csv(&table, fs::File::create(out.path("sweep.csv"))?)?;
    let mut lines = Vec::new();
    for c in &table.cells {
        lines.push(cell_line(c));
        if verbose {
            lines.extend(run_lines(c));
        }
    }
    lines.push(format!("horizon t_max={} consensus_tol={:e} h={}", table.t_max, table.consensus_tol, table.h));
    Ok(lines)
}

fn cmd_compare(doc: Document, seed: Option<u64>, out: &Output, verbose: bool) -> Result<Vec<String>> {
    let mut spec = section(doc.compare, "compare")?;
    if let Some(s) = seed {
        spec.base_seed = s;
    }
    let table = run_comparison(&spec)?;
    out.json("compare.json", &spec, &table)?;
    write_comparison_csv(&table, fs::File::create(out.path("compare.csv"))?)?;
    let mut lines = Vec::new();
    for r in &table.rows {
        for c in [&r.scbo, &r.cbo] {
            lines.push(cell_line(c));
            if verbose {
                lines.extend(run_lines(c));
            }
        }
    }
    lines.push(format!("horizon t_max={} consensus_tol={:e} h={}", table.t_max, table.consensus_tol, table.h));
    Ok(lines)
}

#[derive(Serialize, serde::Deserialize)]
struct ConditionResult {
    report: crate::analysis::ConditionReport,
    runs: usize,
    /// Smallest `f(x_inf)` over the runs, an upper bound on the essential infimum.
    min_over_runs_f_x_inf: Option<f64>,
}

fn cmd_condition(doc: Document, seed: Option<u64>, out: &Output) -> Result<Vec<String>> {
    let mut sec = section(doc.condition, "condition")?;
    if let Some(s) = seed {
        sec.seed = s;
    }
    let spec = build_by_name(&sec.objective, sec.dim, sec.smoother)?;
    let init = checked_box(sec.init)?;
    let input = ConditionInput::sample(&spec, sec.params, &init, sec.n_particles, sec.samples, sec.seed)?;
    let report = check_condition(&input)?;
    let min_f = if sec.runs > 0 {
        let p = sec.params;
        let base = SolverConfig {
            beta: p.beta,
            lambda: p.lambda,
            sigma: p.sigma,
            alpha: p.alpha,
            mu0: p.mu0,
            n_particles: sec.n_particles,
            dim: sec.dim,
            t_max: sec.t_max,
            ..Default::default()
        };
        let init = InitSpec::uniform(init);
        let mut best = f64::INFINITY;
        for r in 0..sec.runs {
            let cfg = SolverConfig { seed: crate::bench::run_seed(sec.seed, &sec.objective, r), ..base.clone() };
            best = best.min(run(&cfg, &spec, &init)?.f_x_inf);
        }
        Some(best)
    } else {
        None
    };
    let line = format!(
        "condition {} beta={}: lhs={:.4e} rhs={:.4e} satisfied={} (with 2SE margin: {}) E(beta)={:.4e} eps={:.6e} gamma={:.4e}{}",
        sec.objective,
        report.beta,
        report.lhs,
        report.rhs,
        report.satisfied,
        report.satisfied_with_margin,
        report.error_bound,
        report.epsilon,
        report.gamma,
        min_f.map_or(String::new(), |f| format!(" min-over-{}-runs f(x_inf)={f:.3e}", sec.runs))
    );
    let result = ConditionResult { report, runs: sec.runs, min_over_runs_f_x_inf: min_f };
    out.json("condition.json", &sec, &result)?;
    Ok(vec![line])
}

#[derive(Serialize, serde::Deserialize)]
struct DecayResult {
    discrete: crate::analysis::DecayReport,
    continuous: Vec<crate::analysis::MomentRow>,
}

fn cmd_decay(doc: Document, seed: Option<u64>, out: &Output) -> Result<Vec<String>> {
    let mut sec = section(doc.decay, "decay")?;
    if let Some(s) = seed {
        sec.solver.seed = s;
    }
    let discrete = verify_discrete_decay(&sec.solver, sec.n_steps, sec.n_seeds, sec.every)?;
    let continuous = if sec.t_checkpoints.is_empty() {
        Vec::new()
    } else {
        let probe = DecayProbe {
            lambda: sec.solver.lambda,
            sigma: sec.solver.sigma,
            t_checkpoints: sec.t_checkpoints.clone(),
            n_samples: sec.probe_samples,
            seed: sec.solver.seed,
        };
        exact_pairwise_moment(&probe, sec.init_diff)?
    };
    out.csv_rows(
        "decay.csv",
        &["step", "t", "empirical", "std_err", "theoretical", "exact_std_err", "z"],
        discrete.rows.iter().map(|r| {
            vec![
                r.step.to_string(),
                r.t.to_string(),
                r.empirical.to_string(),
                r.std_err.to_string(),
                r.theoretical.to_string(),
                r.exact_std_err.to_string(),
                r.z.to_string(),
            ]
        }),
    )?;
    let mut lines = vec![format!(
        "decay lambda={} sigma={} h={}: factor/step={:.6} max|z|={:.2} over {} checkpoints, {} seeds",
        discrete.lambda,
        discrete.sigma,
        discrete.h,
        discrete.factor_per_step,
        discrete.max_abs_z,
        discrete.rows.len(),
        discrete.n_seeds
    )];
    for r in &continuous {
        lines.push(format!(
            "moment t={}: empirical={:.5e} theoretical={:.5e} rel.err={:.2e}",
            r.t,
            r.empirical,
            r.theoretical,
            r.relative_error()
        ));
    }
    out.json("decay.json", &sec, &DecayResult { discrete, continuous })?;
    Ok(lines)
}

fn cmd_laplace(doc: Document, seed: Option<u64>, out: &Output) -> Result<Vec<String>> {
    let mut sec = section(doc.laplace, "laplace")?;
    if let Some(s) = seed {
        sec.seed = s;
    }
    let spec = build_by_name(&sec.objective, sec.dim, sec.smoother)?;
    let bounds = checked_box(*sec.bounds.get_or_insert(spec.bounds))?;
    let rows = laplace_estimate(&spec, &bounds, &sec.betas, sec.samples, sec.seed)?;
    out.json("laplace.json", &sec, &rows)?;
    out.csv_rows(
        "laplace.csv",
        &["beta", "value", "std_err"],
        rows.iter().map(|r| vec![r.beta.to_string(), r.value.to_string(), r.std_err.to_string()]),
    )?;
    Ok(rows
        .iter()
        .map(|r| format!("laplace {} beta={}: {:.5e} +- {:.1e}", sec.objective, r.beta, r.value, r.std_err))
        .collect())
}

fn cmd_spg(doc: Document, seed: Option<u64>, out: &Output) -> Result<Vec<String>> {
    let mut sec = section(doc.spg, "spg")?;
    if let Some(s) = seed {
        sec.seed = s;
    }
    let spec = build_by_name(&sec.objective, sec.dim, sec.smoother)?;
    let starts = uniform_starts(&spec, sec.n_starts, sec.seed);
    let summary = spg_multistart(&spec, &starts, &sec.config, sec.success_threshold)?;
    out.json("spg.json", &sec, &summary)?;
    let mut header = vec!["success".to_string()];
    header.extend((0..sec.dim).map(|l| format!("x0_{l}")));
    header.extend((0..sec.dim).map(|l| format!("x_{l}")));
    header.push("f".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv_rows(
        "spg_starts.csv",
        &header,
        summary.runs.iter().map(|r| {
            let mut row = vec![r.success.to_string()];
            row.extend(r.x0.iter().chain(&r.x).map(f64::to_string));
            row.push(r.f_x.to_string());
            row
        }),
    )?;
    Ok(vec![format!(
        "spg {} d={}: {}/{} starts successful (threshold {})",
        sec.objective, sec.dim, summary.n_success, summary.n_starts, sec.success_threshold
    )])
}

/// Parses arguments, configures the worker pool, runs and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    if let Some(n) = cli.command.common().threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} worker threads: {e}");
            return exit::USAGE;
        }
    }
    match execute(&cli.command) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            exit::OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
