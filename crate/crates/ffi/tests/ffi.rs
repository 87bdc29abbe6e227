use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use scbo_ffi::*;

fn objective(id: &str, dim: usize) -> *mut ScboObjective {
    let id = CString::new(id).unwrap();
    let mut obj = ptr::null_mut();
    let st = unsafe { scbo_objective_new(id.as_ptr(), dim, ScboSmoother::LogExp, &mut obj) };
    assert_eq!(st, ScboStatus::Ok);
    obj
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(scbo_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn evaluates_objective() {
    let obj = objective("f2", 2);
    let mut f = 0.0;
    let st = unsafe { scbo_objective_value(obj, [1.0, -2.0].as_ptr(), 2, &mut f) };
    assert_eq!(st, ScboStatus::Ok);
    assert_eq!(f, 5.0);
    let mut g = [0.0; 2];
    let st = unsafe { scbo_objective_grad(obj, [1.0, -2.0].as_ptr(), 2, 0.01, g.as_mut_ptr()) };
    assert_eq!(st, ScboStatus::Ok);
    assert!(g[0] > 0.0 && g[1] < 0.0);
    let mut info = std::mem::MaybeUninit::<ScboObjectiveInfo>::uninit();
    assert_eq!(unsafe { scbo_objective_info(obj, info.as_mut_ptr()) }, ScboStatus::Ok);
    let info = unsafe { info.assume_init() };
    assert_eq!((info.dim, info.lo, info.hi, info.f_min), (2, -5.0, 5.0, 0.0));
    unsafe { scbo_objective_free(obj) };
}

#[test]
fn error_codes_and_messages() {
    let id = CString::new("f9").unwrap();
    let mut obj = ptr::null_mut();
    let st = unsafe { scbo_objective_new(id.as_ptr(), 2, ScboSmoother::Sqrt, &mut obj) };
    assert_eq!(st, ScboStatus::UnknownBenchmark);
    assert!(obj.is_null());
    assert!(last_error().contains("f9"));

    let obj = objective("f1", 2);
    let mut f = 0.0;
    assert_eq!(unsafe { scbo_objective_value(obj, [0.0; 3].as_ptr(), 3, &mut f) }, ScboStatus::DimensionMismatch);
    assert_eq!(unsafe { scbo_objective_value(obj, ptr::null(), 2, &mut f) }, ScboStatus::NullPointer);
    assert_eq!(
        unsafe { scbo_objective_smoothed(obj, [0.0; 2].as_ptr(), 2, -1.0, &mut f) },
        ScboStatus::InvalidArgument
    );
    assert_eq!(unsafe { scbo_objective_value(ptr::null(), [0.0; 2].as_ptr(), 2, &mut f) }, ScboStatus::NullPointer);
    unsafe { scbo_objective_free(obj) };
    unsafe { scbo_objective_free(ptr::null_mut()) };
}

#[test]
fn run_roundtrip() {
    let obj = objective("f2", 2);
    let mut cfg = std::mem::MaybeUninit::<ScboSolverConfig>::uninit();
    assert_eq!(unsafe { scbo_solver_config_default(cfg.as_mut_ptr()) }, ScboStatus::Ok);
    let mut cfg = unsafe { cfg.assume_init() };
    cfg.n_particles = 60;
    cfg.t_max = 5.0;
    cfg.seed = 9;
    let mut rep = ptr::null_mut();
    assert_eq!(unsafe { scbo_run(obj, &cfg, &mut rep) }, ScboStatus::Ok);

    let mut s = std::mem::MaybeUninit::<ScboRunSummary>::uninit();
    assert_eq!(unsafe { scbo_run_report_summary(rep, s.as_mut_ptr()) }, ScboStatus::Ok);
    let s = unsafe { s.assume_init() };
    let mut x = [0.0; 2];
    assert_eq!(unsafe { scbo_run_report_x_inf(rep, x.as_mut_ptr(), 2) }, ScboStatus::Ok);
    assert!((s.sol_err - (x[0] * x[0] + x[1] * x[1])).abs() < 1e-15);
    assert_eq!(unsafe { scbo_run_report_x_inf(rep, x.as_mut_ptr(), 1) }, ScboStatus::DimensionMismatch);

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { scbo_run_report_json(rep, &mut json) }, ScboStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["steps"].as_u64().unwrap(), s.steps);
    unsafe {
        scbo_string_free(json);
        scbo_run_report_free(rep);
        scbo_objective_free(obj);
    }
}

#[test]
fn invalid_config_is_rejected() {
    let obj = objective("f1", 2);
    let mut cfg = std::mem::MaybeUninit::<ScboSolverConfig>::uninit();
    unsafe { scbo_solver_config_default(cfg.as_mut_ptr()) };
    let mut cfg = unsafe { cfg.assume_init() };
    cfg.h = -1.0;
    let mut rep = ptr::null_mut();
    assert_eq!(unsafe { scbo_run(obj, &cfg, &mut rep) }, ScboStatus::InvalidArgument);
    assert!(rep.is_null());
    assert!(!last_error().is_empty());
    unsafe { scbo_objective_free(obj) };
}

#[test]
fn header_declares_api() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/scbo.h")).unwrap();
    for sym in [
        "scbo_objective_new",
        "scbo_objective_free",
        "scbo_run",
        "scbo_run_report_free",
        "scbo_last_error_message",
        "scbo_string_free",
        "typedef struct ScboObjective ScboObjective;",
        "SCBO_STATUS_UNKNOWN_BENCHMARK = 3",
    ] {
        assert!(header.contains(sym), "{sym}");
    }
}

fn target_dir() -> PathBuf {
    // <target>/<profile>/deps/<test binary>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_static_library() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libscbo_ffi.a");
    assert!(lib.exists(), "{}", lib.display());
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new(cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}: {}", run.status.code(), String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("steps="));
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
