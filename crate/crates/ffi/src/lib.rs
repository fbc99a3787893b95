//! C interface to the `drsom` solver.
//!
//! Every fallible call returns a [`DrsomStatus`]; on failure a message is
//! kept per thread and can be copied out with
//! [`drsom_last_error_message`]. Handles are opaque and must be released
//! with the matching `*_free` function.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, c_int, c_void, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use drsom::problems::{classic, Instance};
use drsom::{CorrectorPolicy, Error, Mode, ModelMethod, Objective, Problem, RunReport, SolverConfig, Status};
use nalgebra::DVector;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrsomStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NonFiniteStart = 4,
    Io = 5,
    Parse = 6,
    Solver = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrsomMode {
    TrustRadius = 0,
    RadiusFree = 1,
    FixedRadius = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrsomModel {
    HvpExact = 0,
    HvpFd = 1,
    Interpolation = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrsomRunStatus {
    Converged = 0,
    MaxIter = 1,
    Stalled = 2,
    TimeLimit = 3,
    Error = 4,
}

/// Solver settings.
pub struct DrsomConfig(SolverConfig);

/// An objective function.
pub struct DrsomProblem {
    objective: Objective,
    start: DVector<f64>,
}

/// Outcome of a run.
pub struct DrsomResult(RunReport);

/// `f(x)` for `x` of length `n`.
pub type DrsomValueFn = Option<unsafe extern "C" fn(x: *const f64, n: usize, user_data: *mut c_void) -> f64>;
/// Writes the gradient at `x` into `out`, both of length `n`.
pub type DrsomGradientFn =
    Option<unsafe extern "C" fn(x: *const f64, n: usize, out: *mut f64, user_data: *mut c_void)>;

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: DrsomStatus, msg: impl Into<String>) -> DrsomStatus {
    set_error(msg);
    status
}

fn from_error(e: &Error) -> DrsomStatus {
    let status = match e {
        Error::InvalidConfig(_) | Error::InvalidInstance(_) => DrsomStatus::InvalidArgument,
        Error::DimensionMismatch { .. } => DrsomStatus::DimensionMismatch,
        Error::NonFiniteStart => DrsomStatus::NonFiniteStart,
        Error::Io(_) => DrsomStatus::Io,
        Error::Json(_) => DrsomStatus::Parse,
        _ => DrsomStatus::Solver,
    };
    fail(status, e.to_string())
}

/// Runs `f`, converting panics into [`DrsomStatus::Panic`].
fn guard(f: impl FnOnce() -> DrsomStatus) -> DrsomStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == DrsomStatus::Ok {
                set_error("");
            }
            status
        }
        Err(_) => fail(DrsomStatus::Panic, "panic inside the library"),
    }
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, DrsomStatus> {
    if s.is_null() {
        return Err(fail(DrsomStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(DrsomStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], DrsomStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(DrsomStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

fn emit<T>(out: *mut *mut T, value: T) -> DrsomStatus {
    if out.is_null() {
        return fail(DrsomStatus::NullPointer, "output pointer is null");
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    DrsomStatus::Ok
}

macro_rules! handle {
    ($p:expr) => {
        match unsafe { $p.as_ref() } {
            Some(h) => h,
            None => return fail(DrsomStatus::NullPointer, "handle is null"),
        }
    };
}

macro_rules! handle_mut {
    ($p:expr) => {
        match unsafe { $p.as_mut() } {
            Some(h) => h,
            None => return fail(DrsomStatus::NullPointer, "handle is null"),
        }
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn drsom_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Length in bytes of the calling thread's last error message, excluding
/// the terminating NUL.
#[no_mangle]
pub extern "C" fn drsom_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len())
}

/// Copies the last error message into `buf` (truncating, always
/// NUL-terminated) and returns the number of bytes written without the NUL.
///
/// # Safety
/// `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn drsom_last_error_message(buf: *mut c_char, len: usize) -> usize {
    if buf.is_null() || len == 0 {
        return 0;
    }
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let k = msg.len().min(len - 1);
        ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), k);
        *buf.add(k) = 0;
        k
    })
}

/// New configuration with library defaults.
#[no_mangle]
pub extern "C" fn drsom_config_new() -> *mut DrsomConfig {
    Box::into_raw(Box::new(DrsomConfig(SolverConfig::default())))
}

/// Configuration from its JSON encoding.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn drsom_config_from_json(json: *const c_char, out: *mut *mut DrsomConfig) -> DrsomStatus {
    guard(|| {
        let text = match str_arg(json, "json") {
            Ok(s) => s,
            Err(status) => return status,
        };
        match serde_json::from_str::<SolverConfig>(text) {
            Ok(cfg) => match cfg.validate() {
                Ok(()) => emit(out, DrsomConfig(cfg)),
                Err(e) => from_error(&e),
            },
            Err(e) => fail(DrsomStatus::Parse, e.to_string()),
        }
    })
}

/// # Safety
/// `cfg` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn drsom_config_free(cfg: *mut DrsomConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn drsom_config_set_mode(cfg: *mut DrsomConfig, mode: DrsomMode) -> DrsomStatus {
    let cfg = handle_mut!(cfg);
    cfg.0.mode = match mode {
        DrsomMode::TrustRadius => Mode::TrustRadius,
        DrsomMode::RadiusFree => Mode::RadiusFree,
        DrsomMode::FixedRadius => Mode::FixedRadius,
    };
    DrsomStatus::Ok
}

/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn drsom_config_set_model(cfg: *mut DrsomConfig, model: DrsomModel) -> DrsomStatus {
    let cfg = handle_mut!(cfg);
    cfg.0.model_method = match model {
        DrsomModel::HvpExact => ModelMethod::HvpExact,
        DrsomModel::HvpFd => ModelMethod::HvpFd,
        DrsomModel::Interpolation => ModelMethod::default(),
    };
    DrsomStatus::Ok
}

/// Gradient-norm tolerance and iteration cap.
///
/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn drsom_config_set_limits(cfg: *mut DrsomConfig, tol_g: f64, max_iter: usize) -> DrsomStatus {
    let cfg = handle_mut!(cfg);
    if !(tol_g > 0.0) || max_iter == 0 {
        return fail(DrsomStatus::InvalidArgument, "need tol_g > 0 and max_iter > 0");
    }
    cfg.0.tol_g = tol_g;
    cfg.0.max_iter = max_iter;
    DrsomStatus::Ok
}

/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn drsom_config_set_seed(cfg: *mut DrsomConfig, seed: u64) -> DrsomStatus {
    handle_mut!(cfg).0.seed = seed;
    DrsomStatus::Ok
}

/// Nonzero `enabled` turns on the periodic corrector with default settings.
///
/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn drsom_config_set_corrector(cfg: *mut DrsomConfig, enabled: c_int) -> DrsomStatus {
    handle_mut!(cfg).0.corrector = if enabled != 0 { CorrectorPolicy::periodic() } else { CorrectorPolicy::Off };
    DrsomStatus::Ok
}

/// Curvature estimate used by the fixed-radius mode.
///
/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn drsom_config_set_curvature_estimate(cfg: *mut DrsomConfig, m_est: f64) -> DrsomStatus {
    let cfg = handle_mut!(cfg);
    if !(m_est > 0.0 && m_est.is_finite()) {
        return fail(DrsomStatus::InvalidArgument, "curvature estimate must be positive");
    }
    cfg.0.m_est = Some(m_est);
    DrsomStatus::Ok
}

struct Callbacks {
    n: usize,
    value: unsafe extern "C" fn(*const f64, usize, *mut c_void) -> f64,
    gradient: unsafe extern "C" fn(*const f64, usize, *mut f64, *mut c_void),
    user_data: *mut c_void,
}

impl Problem for Callbacks {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        unsafe { (self.value)(x.as_ptr(), self.n, self.user_data) }
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.n);
        unsafe { (self.gradient)(x.as_ptr(), self.n, g.as_mut_ptr(), self.user_data) };
        g
    }
}

/// Problem defined by C callbacks. The starting point defaults to zero.
/// `user_data` is passed through untouched and must outlive the handle.
///
/// # Safety
/// The callbacks must be safe to call with any `x` of length `n`; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn drsom_problem_from_callbacks(
    n: usize,
    value: DrsomValueFn,
    gradient: DrsomGradientFn,
    user_data: *mut c_void,
    out: *mut *mut DrsomProblem,
) -> DrsomStatus {
    guard(|| {
        let (Some(value), Some(gradient)) = (value, gradient) else {
            return fail(DrsomStatus::NullPointer, "callback is null");
        };
        if n == 0 {
            return fail(DrsomStatus::InvalidArgument, "dimension must be positive");
        }
        let problem = Callbacks { n, value, gradient, user_data };
        emit(out, DrsomProblem { objective: Objective::new(problem), start: DVector::zeros(n) })
    })
}

/// Problem from an instance file written by `drsom gen`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn drsom_problem_from_instance_file(
    path: *const c_char,
    out: *mut *mut DrsomProblem,
) -> DrsomStatus {
    guard(|| {
        let path = match str_arg(path, "path") {
            Ok(s) => s,
            Err(status) => return status,
        };
        match Instance::load(Path::new(path)) {
            Ok(inst) => emit(out, DrsomProblem { objective: inst.objective(), start: inst.start() }),
            Err(e) => from_error(&e),
        }
    })
}

/// Built-in test problem by name (`rosenbrock`, `quadratic`, `beale`,
/// `himmelblau`, `quartic`), with its customary start.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn drsom_problem_builtin(
    name: *const c_char,
    n: usize,
    seed: u64,
    out: *mut *mut DrsomProblem,
) -> DrsomStatus {
    guard(|| {
        let name = match str_arg(name, "name") {
            Ok(s) => s,
            Err(status) => return status,
        };
        match classic::by_name(name, n, 1e3, seed) {
            Some(p) => emit(out, DrsomProblem { objective: p.objective, start: p.start }),
            None => fail(DrsomStatus::InvalidArgument, format!("unknown problem {name:?}")),
        }
    })
}

/// # Safety
/// `problem` must be a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn drsom_problem_dim(problem: *const DrsomProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.objective.dim())
}

/// Copies the problem's default starting point into `out` (length `n`).
///
/// # Safety
/// `problem` must be live and `out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn drsom_problem_start(problem: *const DrsomProblem, out: *mut f64, n: usize) -> DrsomStatus {
    let p = handle!(problem);
    copy_out(p.start.as_slice(), out, n)
}

/// # Safety
/// `problem` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn drsom_problem_free(problem: *mut DrsomProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

unsafe fn copy_out(src: &[f64], out: *mut f64, n: usize) -> DrsomStatus {
    if n != src.len() {
        return fail(DrsomStatus::DimensionMismatch, format!("expected length {}, got {n}", src.len()));
    }
    if out.is_null() {
        return fail(DrsomStatus::NullPointer, "output buffer is null");
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, n);
    DrsomStatus::Ok
}

/// Minimizes from `x0` (length `n`), or from the problem's default start
/// when `x0` is null. A run that stops without converging still returns
/// `Ok`; inspect the result status.
///
/// # Safety
/// Handles must be live; `x0` must be null or hold `n` doubles; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn drsom_minimize(
    problem: *const DrsomProblem,
    config: *const DrsomConfig,
    x0: *const f64,
    n: usize,
    out: *mut *mut DrsomResult,
) -> DrsomStatus {
    let p = handle!(problem);
    let cfg = handle!(config);
    guard(|| {
        let start = if x0.is_null() {
            p.start.clone()
        } else {
            match slice_arg(x0, n, "x0") {
                Ok(s) => DVector::from_column_slice(s),
                Err(status) => return status,
            }
        };
        p.objective.reset_counts();
        match drsom::minimize(&p.objective, &start, &cfg.0) {
            Ok(report) => emit(out, DrsomResult(report)),
            Err(e) => from_error(&e),
        }
    })
}

/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn drsom_result_status(result: *const DrsomResult) -> DrsomRunStatus {
    match result.as_ref().map(|r| r.0.status) {
        Some(Status::Converged) => DrsomRunStatus::Converged,
        Some(Status::MaxIter) => DrsomRunStatus::MaxIter,
        Some(Status::Stalled) => DrsomRunStatus::Stalled,
        Some(Status::TimeLimit) => DrsomRunStatus::TimeLimit,
        Some(Status::Error) | None => DrsomRunStatus::Error,
    }
}

/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn drsom_result_iterations(result: *const DrsomResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.iterations)
}

/// NaN for a null handle.
///
/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn drsom_result_f(result: *const DrsomResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.0.f_final)
}

/// NaN for a null handle.
///
/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn drsom_result_gnorm(result: *const DrsomResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.0.gnorm_final)
}

/// Copies the final iterate into `out` (length `n`).
///
/// # Safety
/// `result` must be live and `out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn drsom_result_x(result: *const DrsomResult, out: *mut f64, n: usize) -> DrsomStatus {
    let r = handle!(result);
    copy_out(r.0.x_final.as_slice(), out, n)
}

/// Function, gradient and HVP evaluation counts of the run.
///
/// # Safety
/// `result` must be live; each output pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn drsom_result_counts(
    result: *const DrsomResult,
    n_f: *mut u64,
    n_g: *mut u64,
    n_hvp: *mut u64,
) -> DrsomStatus {
    let r = handle!(result);
    for (dst, v) in [(n_f, r.0.counts.n_f), (n_g, r.0.counts.n_g), (n_hvp, r.0.counts.n_hvp)] {
        if !dst.is_null() {
            *dst = v;
        }
    }
    DrsomStatus::Ok
}

/// # Safety
/// `result` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn drsom_result_free(result: *mut DrsomResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
