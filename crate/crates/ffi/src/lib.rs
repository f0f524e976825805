//! C ABI over the flockns solver.
//!
//! Objects are opaque handles created and destroyed by this library. Every
//! fallible call returns a [`FlnStatus`]; the message of the most recent
//! failure on the calling thread is available from [`fln_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use flockns::diagnostics::{DiagnosticsRecord, DiagnosticsTracker};
use flockns::driver::{advance, cfl_dt, Model, SimState};
use flockns::io::config::{parse_config, SimConfig};
use flockns::io::initial::Scenario;
use flockns::io::output::dump_snapshot;
use flockns::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlnStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    Numerical = 3,
    Io = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Parsed, validated configuration.
pub struct FlnConfig {
    inner: SimConfig,
}

/// A coupled simulation with its diagnostics.
pub struct FlnSim {
    state: SimState,
    model: Model,
    tracker: DiagnosticsTracker,
    last: DiagnosticsRecord,
}

/// Latest diagnostics, in the column order of the time-series CSV.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FlnDiagnostics {
    pub t: f64,
    pub mass_f: f64,
    pub mass_rho: f64,
    pub energy: f64,
    pub viscous_dissipation_cum: f64,
    pub friction_cum: f64,
    pub alignment_cum: f64,
    pub energy_residual: f64,
    pub support_radius: f64,
    pub support_ceiling: f64,
    pub f_l2w: f64,
    pub f_h1w: f64,
    pub rho_linf: f64,
    pub u_linf: f64,
    pub grad_u_linf: f64,
    pub blowup_monitor: f64,
}

impl From<&DiagnosticsRecord> for FlnDiagnostics {
    fn from(r: &DiagnosticsRecord) -> Self {
        FlnDiagnostics {
            t: r.t,
            mass_f: r.mass_f,
            mass_rho: r.mass_rho,
            energy: r.energy,
            viscous_dissipation_cum: r.viscous_dissipation_cum,
            friction_cum: r.friction_cum,
            alignment_cum: r.alignment_cum,
            energy_residual: r.energy_residual,
            support_radius: r.support_radius,
            support_ceiling: r.support_ceiling,
            f_l2w: r.f_l2w,
            f_h1w: r.f_h1w,
            rho_linf: r.rho_linf,
            u_linf: r.u_linf,
            grad_u_linf: r.grad_u_linf,
            blowup_monitor: r.blowup_monitor,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

fn fail(e: Error) -> FlnStatus {
    let status = match e.exit_code() {
        2 => FlnStatus::Config,
        4 => FlnStatus::Io,
        _ => FlnStatus::Numerical,
    };
    set_error(e.to_string());
    status
}

fn guard(f: impl FnOnce() -> FlnStatus) -> FlnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            FlnStatus::Panic
        }
    }
}

macro_rules! non_null {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            set_error(concat!("null pointer: ", stringify!($p)));
            return FlnStatus::NullPointer;
        })+
    };
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fln_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread ("" if none). Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fln_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses `key = value` configuration text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn fln_config_parse(text: *const c_char, out: *mut *mut FlnConfig) -> FlnStatus {
    non_null!(text, out);
    guard(|| {
        let Ok(text) = CStr::from_ptr(text).to_str() else {
            set_error("configuration is not valid UTF-8");
            return FlnStatus::Config;
        };
        match parse_config(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(FlnConfig { inner }));
                FlnStatus::Ok
            }
            Err(e) => fail(e.into()),
        }
    })
}

/// # Safety
/// `cfg` must be null or a handle from [`fln_config_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fln_config_free(cfg: *mut FlnConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Builds the initial state described by `cfg`.
///
/// # Safety
/// `cfg` must be a live config handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn fln_sim_new(cfg: *const FlnConfig, out: *mut *mut FlnSim) -> FlnStatus {
    non_null!(cfg, out);
    guard(|| {
        let build = || -> flockns::Result<FlnSim> {
            let scenario = Scenario::from_config(&(*cfg).inner)?;
            let mut tracker = DiagnosticsTracker::new(scenario.model.params, scenario.weights, scenario.r0);
            let s = &scenario.state;
            let last = tracker.record(s.t, &s.kin, &s.fluid, &scenario.model.op, s.af.max_b())?;
            Ok(FlnSim {
                state: scenario.state,
                model: scenario.model,
                tracker,
                last,
            })
        };
        match build() {
            Ok(sim) => {
                *out = Box::into_raw(Box::new(sim));
                FlnStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

fn step_sim(sim: &mut FlnSim, limit: f64) -> flockns::Result<f64> {
    let (dt, _) = cfl_dt(&sim.state, &sim.model.params, &sim.model.policy)?;
    let dt = dt.min(limit);
    let next = advance(&sim.state, &sim.model, dt)?;
    sim.last = sim
        .tracker
        .record(next.t, &next.kin, &next.fluid, &sim.model.op, next.af.max_b())?;
    sim.state = next;
    Ok(dt)
}

/// Advances one CFL step; the step taken is written to `dt_out` if non-null.
///
/// # Safety
/// `sim` must be a live handle; `dt_out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn fln_sim_step(sim: *mut FlnSim, dt_out: *mut f64) -> FlnStatus {
    non_null!(sim);
    guard(|| match step_sim(&mut *sim, f64::INFINITY) {
        Ok(dt) => {
            if !dt_out.is_null() {
                *dt_out = dt;
            }
            FlnStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Steps until the time reaches `t_end`, shortening the final step.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fln_sim_run_until(sim: *mut FlnSim, t_end: f64) -> FlnStatus {
    non_null!(sim);
    guard(|| {
        let sim = &mut *sim;
        let tol = 1e-12 * t_end.abs().max(1.0);
        while t_end - sim.state.t > tol {
            if let Err(e) = step_sim(sim, t_end - sim.state.t) {
                return fail(e);
            }
        }
        FlnStatus::Ok
    })
}

/// Current time, or NaN for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fln_sim_time(sim: *const FlnSim) -> f64 {
    if sim.is_null() {
        return f64::NAN;
    }
    (*sim).state.t
}

/// Number of spatial cells (length of the density array).
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fln_sim_cells(sim: *const FlnSim) -> usize {
    if sim.is_null() {
        return 0;
    }
    (*sim).state.fluid.rho.len()
}

/// Diagnostics of the current state.
///
/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fln_sim_diagnostics(sim: *const FlnSim, out: *mut FlnDiagnostics) -> FlnStatus {
    non_null!(sim, out);
    *out = FlnDiagnostics::from(&(*sim).last);
    FlnStatus::Ok
}

/// Copies the fluid density into `buf` (capacity `len`).
///
/// # Safety
/// `sim` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn fln_sim_copy_density(sim: *const FlnSim, buf: *mut f64, len: usize) -> FlnStatus {
    non_null!(sim, buf);
    let rho = &(*sim).state.fluid.rho;
    if len < rho.len() {
        set_error(format!("buffer holds {len} values, density has {}", rho.len()));
        return FlnStatus::BufferTooSmall;
    }
    std::ptr::copy_nonoverlapping(rho.as_ptr(), buf, rho.len());
    FlnStatus::Ok
}

/// Writes a binary snapshot of the current state.
///
/// # Safety
/// `sim` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fln_sim_write_snapshot(sim: *const FlnSim, path: *const c_char) -> FlnStatus {
    non_null!(sim, path);
    guard(|| {
        let Ok(p) = CStr::from_ptr(path).to_str() else {
            set_error("path is not valid UTF-8");
            return FlnStatus::Io;
        };
        match dump_snapshot(&(*sim).state, Path::new(p)) {
            Ok(()) => FlnStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `sim` must be null or a handle from [`fln_sim_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fln_sim_free(sim: *mut FlnSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}
