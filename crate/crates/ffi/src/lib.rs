//! C ABI over the `scbo` solver.
//!
//! Objects cross the boundary as opaque handles. Every fallible call returns a
//! [`ScboStatus`]; the message of the last failure on the calling thread is
//! available from [`scbo_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use scbo::dynamics::{run, InitSpec, NoiseMode, RunReport, SolverConfig};
use scbo::objective::{build_by_name, ObjectiveSpec, SmootherKind};
use scbo::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScboStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownBenchmark = 3,
    DimensionMismatch = 4,
    Divergence = 5,
    Numerical = 6,
    Panic = 7,
    Internal = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScboSmoother {
    LogExp = 0,
    Sqrt = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScboNoiseMode {
    Common = 0,
    Independent = 1,
}

/// Opaque benchmark objective.
pub struct ScboObjective {
    spec: ObjectiveSpec,
}

/// Opaque result of one run.
pub struct ScboRunReport {
    report: RunReport,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScboSolverConfig {
    pub lambda: f64,
    pub sigma: f64,
    pub beta: f64,
    pub n_particles: usize,
    pub dim: usize,
    pub h: f64,
    pub t_max: f64,
    pub mu0: f64,
    pub alpha: f64,
    pub noise_mode: ScboNoiseMode,
    pub seed: u64,
    pub consensus_tol: f64,
    pub trace_every: u64,
    pub success_threshold: f64,
}

impl From<&SolverConfig> for ScboSolverConfig {
    fn from(c: &SolverConfig) -> Self {
        ScboSolverConfig {
            lambda: c.lambda,
            sigma: c.sigma,
            beta: c.beta,
            n_particles: c.n_particles,
            dim: c.dim,
            h: c.h,
            t_max: c.t_max,
            mu0: c.mu0,
            alpha: c.alpha,
            noise_mode: match c.noise_mode {
                NoiseMode::Common => ScboNoiseMode::Common,
                NoiseMode::Independent => ScboNoiseMode::Independent,
            },
            seed: c.seed,
            consensus_tol: c.consensus_tol,
            trace_every: c.trace_every,
            success_threshold: c.success_threshold,
        }
    }
}

impl From<&ScboSolverConfig> for SolverConfig {
    fn from(c: &ScboSolverConfig) -> Self {
        SolverConfig {
            lambda: c.lambda,
            sigma: c.sigma,
            beta: c.beta,
            n_particles: c.n_particles,
            dim: c.dim,
            h: c.h,
            t_max: c.t_max,
            mu0: c.mu0,
            alpha: c.alpha,
            noise_mode: match c.noise_mode {
                ScboNoiseMode::Common => NoiseMode::Common,
                ScboNoiseMode::Independent => NoiseMode::Independent,
            },
            seed: c.seed,
            consensus_tol: c.consensus_tol,
            trace_every: c.trace_every,
            success_threshold: c.success_threshold,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScboObjectiveInfo {
    pub dim: usize,
    pub lo: f64,
    pub hi: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub kappa: f64,
    pub eta: f64,
    pub q: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScboRunSummary {
    pub f_x_inf: f64,
    pub normalized_gap: f64,
    pub sol_err: f64,
    pub final_diameter: f64,
    pub t_final: f64,
    pub steps: u64,
    pub success: bool,
    pub converged: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> ScboStatus {
    match err {
        Error::UnknownBenchmark(_) => ScboStatus::UnknownBenchmark,
        Error::DimensionMismatch { .. } => ScboStatus::DimensionMismatch,
        Error::Divergence { .. } => ScboStatus::Divergence,
        Error::NonFiniteEnergy { .. } | Error::NonFiniteStep { .. } => ScboStatus::Numerical,
        Error::NonFinite { .. } | Error::InvalidParameter { .. } | Error::Config(_) => ScboStatus::InvalidArgument,
        _ => ScboStatus::Internal,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (ScboStatus, String)>) -> ScboStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ScboStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside scbo");
            ScboStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (ScboStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (ScboStatus, String) {
    (ScboStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn input<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], (ScboStatus, String)> {
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn objective<'a>(obj: *const ScboObjective) -> Result<&'a ScboObjective, (ScboStatus, String)> {
    obj.as_ref().ok_or_else(|| null("objective"))
}

fn check_dim(spec: &ObjectiveSpec, len: usize) -> Result<(), (ScboStatus, String)> {
    if len == spec.dim() {
        Ok(())
    } else {
        Err(lib_err(Error::DimensionMismatch { expected: spec.dim(), got: len }))
    }
}

/// Message of the last failed call on this thread. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn scbo_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn scbo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a benchmark objective (`example1`, `f1` .. `f5`).
///
/// # Safety
/// `id` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn scbo_objective_new(
    id: *const c_char,
    dim: usize,
    smoother: ScboSmoother,
    out: *mut *mut ScboObjective,
) -> ScboStatus {
    guard(|| {
        if id.is_null() {
            return Err(null("id"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let id = CStr::from_ptr(id)
            .to_str()
            .map_err(|_| (ScboStatus::InvalidArgument, "id is not UTF-8".to_string()))?;
        let kind = match smoother {
            ScboSmoother::LogExp => SmootherKind::LogExp,
            ScboSmoother::Sqrt => SmootherKind::Sqrt,
        };
        let spec = build_by_name(id, dim, kind).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(ScboObjective { spec }));
        Ok(())
    })
}

/// # Safety
/// `obj` must come from [`scbo_objective_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn scbo_objective_free(obj: *mut ScboObjective) {
    if !obj.is_null() {
        drop(Box::from_raw(obj));
    }
}

/// # Safety
/// `obj` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn scbo_objective_info(obj: *const ScboObjective, out: *mut ScboObjectiveInfo) -> ScboStatus {
    guard(|| {
        let spec = &objective(obj)?.spec;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ScboObjectiveInfo {
            dim: spec.dim(),
            lo: spec.bounds.lo,
            hi: spec.bounds.hi,
            f_min: spec.f_min,
            f_max: spec.f_max,
            kappa: spec.constants.kappa,
            eta: spec.constants.eta,
            q: spec.constants.q,
        };
        Ok(())
    })
}

/// `f(x)`.
///
/// # Safety
/// `x` must point to `len` doubles and `out` to one.
#[no_mangle]
pub unsafe extern "C" fn scbo_objective_value(
    obj: *const ScboObjective,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> ScboStatus {
    guard(|| {
        let spec = &objective(obj)?.spec;
        let x = input(x, len, "x")?;
        check_dim(spec, len)?;
        *out.as_mut().ok_or_else(|| null("out"))? = spec.value(x);
        Ok(())
    })
}

/// `f~(x, mu)`.
///
/// # Safety
/// `x` must point to `len` doubles and `out` to one.
#[no_mangle]
pub unsafe extern "C" fn scbo_objective_smoothed(
    obj: *const ScboObjective,
    x: *const f64,
    len: usize,
    mu: f64,
    out: *mut f64,
) -> ScboStatus {
    guard(|| {
        let spec = &objective(obj)?.spec;
        let x = input(x, len, "x")?;
        check_dim(spec, len)?;
        if !(mu.is_finite() && mu > 0.0) {
            return Err((ScboStatus::InvalidArgument, format!("mu must be positive, got {mu}")));
        }
        *out.as_mut().ok_or_else(|| null("out"))? = spec.smoothed(x, mu);
        Ok(())
    })
}

/// Writes `grad_x f~(x, mu)` into `out` (`len` doubles).
///
/// # Safety
/// `x` and `out` must each point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn scbo_objective_grad(
    obj: *const ScboObjective,
    x: *const f64,
    len: usize,
    mu: f64,
    out: *mut f64,
) -> ScboStatus {
    guard(|| {
        let spec = &objective(obj)?.spec;
        let x = input(x, len, "x")?;
        check_dim(spec, len)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err((ScboStatus::InvalidArgument, format!("mu must be positive, got {mu}")));
        }
        spec.objective.grad_x(x, mu, slice::from_raw_parts_mut(out, len));
        Ok(())
    })
}

/// Fills `out` with the default solver configuration.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn scbo_solver_config_default(out: *mut ScboSolverConfig) -> ScboStatus {
    guard(|| {
        *out.as_mut().ok_or_else(|| null("out"))? = (&SolverConfig::default()).into();
        Ok(())
    })
}

/// One seeded run with particles drawn uniformly from the objective's box.
///
/// # Safety
/// All pointers must be valid; `*out` receives a handle to free with [`scbo_run_report_free`].
#[no_mangle]
pub unsafe extern "C" fn scbo_run(
    obj: *const ScboObjective,
    cfg: *const ScboSolverConfig,
    out: *mut *mut ScboRunReport,
) -> ScboStatus {
    guard(|| {
        let spec = &objective(obj)?.spec;
        let cfg: SolverConfig = cfg.as_ref().ok_or_else(|| null("cfg"))?.into();
        if out.is_null() {
            return Err(null("out"));
        }
        let report = run(&cfg, spec, &InitSpec::uniform(spec.bounds)).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(ScboRunReport { report }));
        Ok(())
    })
}

/// # Safety
/// `report` must come from [`scbo_run`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn scbo_run_report_free(report: *mut ScboRunReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn scbo_run_report_summary(report: *const ScboRunReport, out: *mut ScboRunSummary) -> ScboStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.report;
        *out.as_mut().ok_or_else(|| null("out"))? = ScboRunSummary {
            f_x_inf: r.f_x_inf,
            normalized_gap: r.normalized_gap,
            sol_err: r.sol_err,
            final_diameter: r.final_diameter,
            t_final: r.t_final,
            steps: r.steps,
            success: r.success,
            converged: r.converged,
        };
        Ok(())
    })
}

/// Copies the final consensus point into `out` (`len` must equal the dimension).
///
/// # Safety
/// `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn scbo_run_report_x_inf(report: *const ScboRunReport, out: *mut f64, len: usize) -> ScboStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.report;
        if out.is_null() {
            return Err(null("out"));
        }
        if len != r.x_inf.len() {
            return Err(lib_err(Error::DimensionMismatch { expected: r.x_inf.len(), got: len }));
        }
        slice::from_raw_parts_mut(out, len).copy_from_slice(&r.x_inf);
        Ok(())
    })
}

/// Full report as JSON. Free the string with [`scbo_string_free`].
///
/// # Safety
/// `report` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn scbo_run_report_json(report: *const ScboRunReport, out: *mut *mut c_char) -> ScboStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.report;
        if out.is_null() {
            return Err(null("out"));
        }
        let json = serde_json::to_string(r).map_err(|e| (ScboStatus::Internal, e.to_string()))?;
        *out = CString::new(json).map_err(|e| (ScboStatus::Internal, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn scbo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
