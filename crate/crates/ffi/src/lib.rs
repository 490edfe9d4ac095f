//! C ABI for the feederflow solver.
//!
//! Scenarios and solutions are opaque heap handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call
//! returns an [`FfStatus`]; the message of the last failure on the calling
//! thread is available through [`ff_last_error`]. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use feederflow::bvp::{solve_bvp, SolveDiagnostics};
use feederflow::dissipation::{analyze, DissipationReport, Phenomenon};
use feederflow::model::SolutionGrid;
use feederflow::scenario::{parse_scenario, preset, Scenario};
use feederflow::Error;

/// Status codes. Values 1 to 6 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FfStatus {
    Ok = 0,
    /// Parse, validation, domain or unknown-preset error.
    Invalid = 1,
    NotConverged = 2,
    VoltageCollapse = 3,
    Io = 6,
    NullPointer = 10,
    /// Text argument is not valid UTF-8.
    InvalidUtf8 = 11,
    /// Unknown column or too small a buffer.
    OutOfRange = 12,
    /// A Rust panic was caught.
    Panic = 13,
}

pub const FF_COLUMN_X: u32 = 0;
pub const FF_COLUMN_THETA: u32 = 1;
pub const FF_COLUMN_V: u32 = 2;
pub const FF_COLUMN_S: u32 = 3;
pub const FF_COLUMN_W: u32 = 4;
pub const FF_COLUMN_P: u32 = 5;
pub const FF_COLUMN_Q: u32 = 6;
pub const FF_COLUMN_PSI_B: u32 = 7;
pub const FF_COLUMN_PSI_G: u32 = 8;
pub const FF_COLUMN_DELTA: u32 = 9;

pub const FF_PHENOMENON_VOLTAGE_DROP: u32 = 1;
pub const FF_PHENOMENON_REVERSE_FLOW: u32 = 2;
pub const FF_PHENOMENON_PHASE_DELAY: u32 = 4;
pub const FF_PHENOMENON_PHASE_ADVANCE: u32 = 8;

/// Opaque scenario handle.
pub struct FfScenario {
    inner: Scenario,
}

/// Opaque handle to a converged solution and its dissipation analysis.
pub struct FfSolution {
    grid: SolutionGrid,
    diagnostics: SolveDiagnostics,
    report: DissipationReport,
    p: Vec<f64>,
    q: Vec<f64>,
}

/// Headline numbers of a solution.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FfSummary {
    pub grid_intervals: usize,
    pub iterations: usize,
    pub final_residual_norm: f64,
    pub v_terminal: f64,
    pub theta_terminal: f64,
    pub v_gradient_0: f64,
    pub theta_gradient_0: f64,
    pub total_loss: f64,
    pub loss_active: f64,
    pub loss_reactive: f64,
    pub residual_d09: f64,
    pub residual_d10: f64,
    pub residual_e05: f64,
    pub residual_e06: f64,
    pub j02_gap: f64,
    pub j04_gap: f64,
    /// Bitwise OR of `FF_PHENOMENON_*`.
    pub phenomena: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> FfStatus {
    match e.exit_code() {
        2 => FfStatus::NotConverged,
        3 => FfStatus::VoltageCollapse,
        6 => FfStatus::Io,
        _ => FfStatus::Invalid,
    }
}

fn fail(e: Error) -> FfStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn guard(f: impl FnOnce() -> FfStatus) -> FfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            FfStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(text: *const c_char) -> Result<&'a str, FfStatus> {
    if text.is_null() {
        set_error("null text pointer");
        return Err(FfStatus::NullPointer);
    }
    CStr::from_ptr(text).to_str().map_err(|_| {
        set_error("text is not valid UTF-8");
        FfStatus::InvalidUtf8
    })
}

fn emit_scenario(result: feederflow::Result<Scenario>, out: *mut *mut FfScenario) -> FfStatus {
    match result {
        Ok(s) => {
            // SAFETY: caller checked `out` for null
            unsafe { *out = Box::into_raw(Box::new(FfScenario { inner: s })) };
            FfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Parses a scenario document.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ff_scenario_from_str(text: *const c_char, out: *mut *mut FfScenario) -> FfStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return FfStatus::NullPointer;
        }
        *out = ptr::null_mut();
        match read_str(text) {
            Ok(t) => emit_scenario(parse_scenario(t), out),
            Err(s) => s,
        }
    })
}

/// Loads a preset (`no_load`, `conventional`, `pv_ev`, `manufactured`),
/// honouring `FEEDERFLOW_PRESET_DIR`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ff_scenario_preset(name: *const c_char, out: *mut *mut FfScenario) -> FfStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return FfStatus::NullPointer;
        }
        *out = ptr::null_mut();
        match read_str(name) {
            Ok(n) => emit_scenario(preset(n), out),
            Err(s) => s,
        }
    })
}

/// Releases a scenario. Null is ignored.
///
/// # Safety
/// `scenario` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ff_scenario_free(scenario: *mut FfScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Solves a scenario. `grid_intervals = 0` keeps the scenario's setting.
///
/// # Safety
/// `scenario` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ff_solve(scenario: *const FfScenario, grid_intervals: usize, out: *mut *mut FfSolution) -> FfStatus {
    guard(|| {
        if scenario.is_null() || out.is_null() {
            set_error("null scenario or output pointer");
            return FfStatus::NullPointer;
        }
        *out = ptr::null_mut();
        let s = &(*scenario).inner;
        let opts = if grid_intervals == 0 {
            s.solver().clone()
        } else {
            s.solver().with_grid(grid_intervals)
        };
        match solve_bvp(s.profile(), s.params(), &opts) {
            Ok((grid, diagnostics)) => {
                let report = analyze(&grid, s.profile(), s.params());
                let (p, q) = grid.xs().iter().map(|&x| s.profile().eval(x)).unzip();
                *out = Box::into_raw(Box::new(FfSolution { grid, diagnostics, report, p, q }));
                FfStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a solution. Null is ignored.
///
/// # Safety
/// `solution` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ff_solution_free(solution: *mut FfSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Number of grid nodes (`N + 1`), or 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ff_solution_len(solution: *const FfSolution) -> usize {
    if solution.is_null() {
        0
    } else {
        (*solution).grid.xs().len()
    }
}

/// Copies one column (`FF_COLUMN_*`) into `buf`, which must hold at least
/// `ff_solution_len` values.
///
/// # Safety
/// `solution` must be a live handle and `buf` must be writable for `len`
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn ff_solution_column(solution: *const FfSolution, column: u32, buf: *mut f64, len: usize) -> FfStatus {
    guard(|| {
        if solution.is_null() || buf.is_null() {
            set_error("null solution or buffer pointer");
            return FfStatus::NullPointer;
        }
        let sol = &*solution;
        let n = sol.grid.xs().len();
        if len < n {
            set_error(format!("buffer holds {len} values, the solution has {n}"));
            return FfStatus::OutOfRange;
        }
        let f = &sol.report.functions;
        let st = sol.grid.states();
        let dst = std::slice::from_raw_parts_mut(buf, n);
        match column {
            FF_COLUMN_X => dst.copy_from_slice(sol.grid.xs()),
            FF_COLUMN_THETA => dst.iter_mut().zip(st).for_each(|(d, s)| *d = s.theta),
            FF_COLUMN_V => dst.iter_mut().zip(st).for_each(|(d, s)| *d = s.v),
            FF_COLUMN_S => dst.iter_mut().zip(st).for_each(|(d, s)| *d = s.s),
            FF_COLUMN_W => dst.iter_mut().zip(st).for_each(|(d, s)| *d = s.w),
            FF_COLUMN_P => dst.copy_from_slice(&sol.p),
            FF_COLUMN_Q => dst.copy_from_slice(&sol.q),
            FF_COLUMN_PSI_B => dst.copy_from_slice(&f.psi_b),
            FF_COLUMN_PSI_G => dst.copy_from_slice(&f.psi_g),
            FF_COLUMN_DELTA => dst.copy_from_slice(&f.delta),
            _ => {
                set_error(format!("unknown column {column}"));
                return FfStatus::OutOfRange;
            }
        }
        FfStatus::Ok
    })
}

/// Fills `out` with the solution's headline numbers.
///
/// # Safety
/// `solution` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ff_solution_summary(solution: *const FfSolution, out: *mut FfSummary) -> FfStatus {
    guard(|| {
        if solution.is_null() || out.is_null() {
            set_error("null solution or output pointer");
            return FfStatus::NullPointer;
        }
        let sol = &*solution;
        let r = &sol.report;
        let phenomena = r.phenomena.flags.iter().fold(0, |acc, f| {
            acc | match f {
                Phenomenon::VoltageDrop => FF_PHENOMENON_VOLTAGE_DROP,
                Phenomenon::ReverseFlow => FF_PHENOMENON_REVERSE_FLOW,
                Phenomenon::PhaseDelay => FF_PHENOMENON_PHASE_DELAY,
                Phenomenon::PhaseAdvance => FF_PHENOMENON_PHASE_ADVANCE,
            }
        });
        *out = FfSummary {
            grid_intervals: sol.grid.intervals(),
            iterations: sol.diagnostics.iterations,
            final_residual_norm: sol.diagnostics.final_residual_norm,
            v_terminal: sol.grid.terminal().v,
            theta_terminal: sol.grid.terminal().theta,
            v_gradient_0: r.v_gradient_0(),
            theta_gradient_0: r.theta_gradient_0(),
            total_loss: r.total_loss(),
            loss_active: r.loss_active(),
            loss_reactive: r.loss_reactive(),
            residual_d09: r.residuals.d09,
            residual_d10: r.residuals.d10,
            residual_e05: r.residuals.e05,
            residual_e06: r.residuals.e06,
            j02_gap: r.integrals.j02_gap,
            j04_gap: r.integrals.j04_gap,
            phenomena,
        };
        FfStatus::Ok
    })
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to fit) and returns the full message length in bytes
/// excluding the terminator. Pass a null `buf` to query the length.
///
/// # Safety
/// `buf` must be null or writable for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ff_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ff_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
