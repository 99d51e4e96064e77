//! C ABI for the simulator: opaque handles, `#[repr(C)]` report structs, and
//! integer status codes mirroring the CLI exit conventions. The matching
//! header lives in `include/nematic.h` (regenerate with cbindgen where
//! available; the committed copy is kept in sync by the layout tests below).
//!
//! Thread safety: a handle must not be used from two threads at once;
//! distinct handles are fully independent. The last error message is stored
//! per thread and read with `nematic_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use nematic::config::{BuiltRun, RunConfig};
use nematic::dynamics::{
    cfl_dt_max, run, step, DtPolicy, RunOutcome, State, StepReport, Termination,
};
use nematic::stationary::{
    kernel_dimension, solve_stationary, Classification, SolveOptions,
};
use nematic::Error;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NematicStatus {
    Ok = 0,
    NullArgument = 1,
    ConfigError = 2,
    Blowup = 3,
    IoError = 4,
    SolverError = 5,
    InvalidUtf8 = 6,
    Panic = 7,
}

/// Per-step scalar diagnostics, mirroring one trajectory row.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NematicReport {
    pub t: f64,
    pub dt: f64,
    pub total_energy: f64,
    pub kinetic: f64,
    pub elastic: f64,
    pub bulk: f64,
    pub dissipation: f64,
    pub budget_defect: f64,
    pub max_abs_d: f64,
    pub grad_u_norm: f64,
    pub residual_norm: f64,
}

/// Summary of a stationary solve. `classification`: 0 constant unit, 1 zero,
/// 2 other. `kernel_dim < 0` means the kernel probe was skipped.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NematicStationarySummary {
    pub residual_norm: f64,
    pub energy: f64,
    pub classification: i32,
    pub converged: i32,
    pub kernel_dim: i64,
    pub smallest_nonzero_eigenvalue: f64,
}

/// Opaque simulation handle.
pub struct NematicSim {
    cfg: RunConfig,
    raw_config: String,
    built: BuiltRun,
    current: State,
    last: Option<RunOutcome>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|c| *c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap());
}

fn status_of(err: &Error) -> NematicStatus {
    match err.exit_code() {
        2 => NematicStatus::ConfigError,
        3 => NematicStatus::Blowup,
        4 => NematicStatus::IoError,
        _ => NematicStatus::SolverError,
    }
}

fn fail(err: &Error) -> NematicStatus {
    set_error(&err.to_string());
    status_of(err)
}

fn path_arg(ptr: *const c_char) -> Result<PathBuf, NematicStatus> {
    if ptr.is_null() {
        set_error("null path argument");
        return Err(NematicStatus::NullArgument);
    }
    let s = unsafe { CStr::from_ptr(ptr) };
    match s.to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(NematicStatus::InvalidUtf8)
        }
    }
}

fn guarded(f: impl FnOnce() -> NematicStatus) -> NematicStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            NematicStatus::Panic
        }
    }
}

fn report_to_c(r: &StepReport) -> NematicReport {
    NematicReport {
        t: r.t,
        dt: r.dt,
        total_energy: r.total_energy,
        kinetic: r.kinetic,
        elastic: r.elastic,
        bulk: r.bulk,
        dissipation: r.dissipation,
        budget_defect: r.budget_defect,
        max_abs_d: r.max_abs_d,
        grad_u_norm: r.grad_u_norm,
        residual_norm: r.residual_norm,
    }
}

/// Library version as a static NUL-terminated string; never freed.
#[no_mangle]
pub extern "C" fn nematic_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated) and returns the full message length.
///
/// # Safety
/// `buf` must point to at least `len` writable bytes, or be null (query).
#[no_mangle]
pub unsafe extern "C" fn nematic_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Creates a simulation from a config file. On success writes the handle to
/// `out`; free it with [`nematic_sim_free`].
///
/// # Safety
/// `config_path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nematic_sim_new(
    config_path: *const c_char,
    out: *mut *mut NematicSim,
) -> NematicStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output handle");
            return NematicStatus::NullArgument;
        }
        let path = match path_arg(config_path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let (cfg, raw_config) = match RunConfig::from_path(&path) {
            Ok(v) => v,
            Err(e) => return fail(&e),
        };
        let built = match cfg.build() {
            Ok(b) => b,
            Err(e) => return fail(&e),
        };
        let current = built.state0.clone();
        let sim = Box::new(NematicSim { cfg, raw_config, built, current, last: None });
        unsafe { *out = Box::into_raw(sim) };
        NematicStatus::Ok
    })
}

/// Advances `n_steps` CFL-limited steps from the current state and fills
/// `report` (when non-null) with the latest diagnostics.
///
/// # Safety
/// `sim` must be a live handle from [`nematic_sim_new`].
#[no_mangle]
pub unsafe extern "C" fn nematic_sim_step(
    sim: *mut NematicSim,
    n_steps: u64,
    report: *mut NematicReport,
) -> NematicStatus {
    guarded(|| {
        let Some(sim) = (unsafe { sim.as_mut() }) else {
            set_error("null simulation handle");
            return NematicStatus::NullArgument;
        };
        let safety = match sim.built.schedule.dt {
            DtPolicy::Fixed(_) => 0.4,
            DtPolicy::Auto { safety } => safety,
        };
        let mut last_report = None;
        for _ in 0..n_steps {
            let dt = match sim.built.schedule.dt {
                DtPolicy::Fixed(dt) => dt,
                DtPolicy::Auto { .. } => safety * cfl_dt_max(&sim.current, &sim.built.params).0,
            };
            match step(&sim.current, &sim.built.params, dt) {
                Ok((next, rep)) => {
                    sim.current = next;
                    last_report = Some(rep);
                }
                Err(e) => return fail(&e),
            }
        }
        if !report.is_null() {
            if let Some(r) = last_report {
                unsafe { *report = report_to_c(&r) };
            }
        }
        NematicStatus::Ok
    })
}

/// Integrates the configured schedule from the current state. The handle
/// keeps the trajectory for [`nematic_sim_write_artifacts`].
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nematic_sim_run(sim: *mut NematicSim) -> NematicStatus {
    guarded(|| {
        let Some(sim) = (unsafe { sim.as_mut() }) else {
            set_error("null simulation handle");
            return NematicStatus::NullArgument;
        };
        match run(&sim.current, &sim.built.params, &sim.built.schedule) {
            Ok(outcome) => {
                sim.current = outcome.final_state.clone();
                let aborted = matches!(outcome.log.termination, Termination::Aborted(_));
                if aborted {
                    set_error(&format!("{:?}", outcome.log.termination));
                }
                sim.last = Some(outcome);
                if aborted {
                    NematicStatus::Blowup
                } else {
                    NematicStatus::Ok
                }
            }
            Err(e) => fail(&e),
        }
    })
}

/// Reports on the current state (budget defect 0 by definition).
///
/// # Safety
/// `sim` must be a live handle and `report` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nematic_sim_report(
    sim: *const NematicSim,
    report: *mut NematicReport,
) -> NematicStatus {
    guarded(|| {
        let Some(sim) = (unsafe { sim.as_ref() }) else {
            set_error("null simulation handle");
            return NematicStatus::NullArgument;
        };
        if report.is_null() {
            set_error("null report pointer");
            return NematicStatus::NullArgument;
        }
        let r = StepReport::for_state(&sim.current, &sim.built.params, 0.0, None);
        unsafe { *report = report_to_c(&r) };
        NematicStatus::Ok
    })
}

/// Writes the artifacts of the last completed [`nematic_sim_run`] to `dir`.
///
/// # Safety
/// `sim` must be a live handle and `dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn nematic_sim_write_artifacts(
    sim: *const NematicSim,
    dir: *const c_char,
) -> NematicStatus {
    guarded(|| {
        let Some(sim) = (unsafe { sim.as_ref() }) else {
            set_error("null simulation handle");
            return NematicStatus::NullArgument;
        };
        let dir = match path_arg(dir) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let Some(outcome) = &sim.last else {
            set_error("no completed run: call nematic_sim_run first");
            return NematicStatus::SolverError;
        };
        match nematic::io::write_run_artifacts(
            &dir,
            &sim.cfg,
            &sim.raw_config,
            &sim.built.params,
            &outcome.log,
            &outcome.final_state,
        ) {
            Ok(()) => NematicStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}

/// Frees a handle; accepts null.
///
/// # Safety
/// `sim` must come from [`nematic_sim_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nematic_sim_free(sim: *mut NematicSim) {
    if !sim.is_null() {
        drop(unsafe { Box::from_raw(sim) });
    }
}

/// Solves the stationary problem described by a config file and fills
/// `summary`; artifacts go to `out_dir` when non-null.
///
/// # Safety
/// Pointer arguments must be valid as documented above.
#[no_mangle]
pub unsafe extern "C" fn nematic_stationary_solve(
    config_path: *const c_char,
    out_dir: *const c_char,
    summary: *mut NematicStationarySummary,
) -> NematicStatus {
    guarded(|| {
        let path = match path_arg(config_path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let (cfg, _raw) = match RunConfig::from_path(&path) {
            Ok(v) => v,
            Err(e) => return fail(&e),
        };
        let built = match cfg.build() {
            Ok(b) => b,
            Err(e) => return fail(&e),
        };
        let opts = SolveOptions {
            tol: cfg.stationary.tol,
            max_time: cfg.stationary.max_time,
            max_iter: cfg.stationary.max_iter,
        };
        let mut report =
            match solve_stationary(&built.state0.d, &built.params, cfg.stationary.method, opts) {
                Ok(r) => r,
                Err(e) => return fail(&e),
            };
        if report.converged {
            match kernel_dimension(&report.z, &built.params, cfg.stationary.zero_tol) {
                Ok((dim, spectrum)) => {
                    report.kernel_dim = Some(dim);
                    report.low_spectrum = spectrum;
                }
                Err(e) => return fail(&e),
            }
        }
        if !summary.is_null() {
            let gap = report
                .low_spectrum
                .iter()
                .map(|e| e.eigenvalue)
                .find(|l| l.abs() > 1e-6)
                .unwrap_or(f64::NAN);
            unsafe {
                *summary = NematicStationarySummary {
                    residual_norm: report.residual_norm,
                    energy: report.energy,
                    classification: match report.classification {
                        Classification::ConstantUnit => 0,
                        Classification::Zero => 1,
                        Classification::Other => 2,
                    },
                    converged: report.converged as i32,
                    kernel_dim: report.kernel_dim.map_or(-1, |d| d as i64),
                    smallest_nonzero_eigenvalue: gap,
                };
            }
        }
        if !out_dir.is_null() {
            let dir = match path_arg(out_dir) {
                Ok(p) => p,
                Err(s) => return s,
            };
            if let Err(e) = std::fs::create_dir_all(&dir) {
                return fail(&Error::Io(e));
            }
            if let Err(e) = nematic::io::write_snapshot_components(
                &dir.join("equilibrium"),
                &built.grid,
                0.0,
                &[("d_x", &report.z.x), ("d_y", &report.z.y)],
            ) {
                return fail(&e);
            }
        }
        NematicStatus::Ok
    })
}

/// Runs the theorem analysis over a completed run directory (equivalent to
/// the `analyze` subcommand, quiet).
///
/// # Safety
/// `run_dir` must be a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn nematic_analyze(run_dir: *const c_char) -> NematicStatus {
    guarded(|| {
        let dir = match path_arg(run_dir) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match nematic::cli::cmd_analyze(Path::new(&dir), true) {
            Ok(()) => NematicStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}
