//! C ABI over the `valse` estimator.
//!
//! Every fallible function returns a [`ValseStatus`]. On failure the message
//! is kept per thread and can be read with [`valse_last_error_message`].
//! Handles are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use num_complex::Complex64;
use valse::engine::{self, EngineConfig, EstimationResult, Heuristic, Mode};
use valse::hyperparams::Hyperparams;
use valse::{circular, MeasurementSet, ValseError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValseStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Degenerate = 3,
    State = 4,
    Singular = 5,
    Generation = 6,
    Parse = 7,
    Validation = 8,
    Io = 9,
    /// A Rust panic was caught at the boundary.
    Internal = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValseHeuristic {
    Mixture = 1,
    Single = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValseMode {
    Full = 0,
    Point = 1,
}

/// Engine settings. Create with [`valse_config_new`].
pub struct ValseConfig(EngineConfig);

/// Output of [`valse_estimate`].
pub struct ValseResult(EstimationResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &ValseError) -> ValseStatus {
    match e {
        ValseError::InvalidArgument(_) => ValseStatus::InvalidArgument,
        ValseError::Degenerate(_) => ValseStatus::Degenerate,
        ValseError::State(_) => ValseStatus::State,
        ValseError::Singular(_) => ValseStatus::Singular,
        ValseError::Generation(_) => ValseStatus::Generation,
        ValseError::Parse { .. } => ValseStatus::Parse,
        ValseError::Validation(_) => ValseStatus::Validation,
        ValseError::Io(_) => ValseStatus::Io,
    }
}

fn fail(status: ValseStatus, msg: impl Into<String>) -> ValseStatus {
    set_error(msg.into());
    status
}

fn guard(f: impl FnOnce() -> ValseStatus) -> ValseStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(ValseStatus::Internal, "panic inside valse"),
    }
}

fn lift(r: valse::Result<()>) -> ValseStatus {
    match r {
        Ok(()) => ValseStatus::Ok,
        Err(e) => fail(status_of(&e), e.to_string()),
    }
}

macro_rules! deref {
    ($p:expr) => {
        match unsafe { $p.as_ref() } {
            Some(v) => v,
            None => return fail(ValseStatus::NullPointer, concat!(stringify!($p), " is null")),
        }
    };
    (mut $p:expr) => {
        match unsafe { $p.as_mut() } {
            Some(v) => v,
            None => return fail(ValseStatus::NullPointer, concat!(stringify!($p), " is null")),
        }
    };
}

/// Message of the last failure on this thread. The pointer stays valid until
/// the next failing call on the same thread. Empty if nothing failed yet.
#[no_mangle]
pub extern "C" fn valse_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn valse_version() -> *const c_char {
    static V: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"",
    };
    V.as_ptr()
}

/// New config with default settings. Never null.
#[no_mangle]
pub extern "C" fn valse_config_new() -> *mut ValseConfig {
    Box::into_raw(Box::new(ValseConfig(EngineConfig::default())))
}

/// # Safety
/// `cfg` must come from [`valse_config_new`] and not be freed yet, or be null.
#[no_mangle]
pub unsafe extern "C" fn valse_config_free(cfg: *mut ValseConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `cfg` must be a live config handle or null.
#[no_mangle]
pub unsafe extern "C" fn valse_config_set_heuristic(cfg: *mut ValseConfig, h: ValseHeuristic) -> ValseStatus {
    let c = deref!(mut cfg);
    c.0.heuristic = match h {
        ValseHeuristic::Mixture => Heuristic::H1,
        ValseHeuristic::Single => Heuristic::H2,
    };
    ValseStatus::Ok
}

/// Mixture size used by [`ValseHeuristic::Mixture`].
///
/// # Safety
/// `cfg` must be a live config handle or null.
#[no_mangle]
pub unsafe extern "C" fn valse_config_set_mixture_size(cfg: *mut ValseConfig, d: usize) -> ValseStatus {
    let c = deref!(mut cfg);
    if d < 1 {
        return fail(ValseStatus::InvalidArgument, "mixture size must be >= 1");
    }
    c.0.d = d;
    ValseStatus::Ok
}

/// # Safety
/// `cfg` must be a live config handle or null.
#[no_mangle]
pub unsafe extern "C" fn valse_config_set_mode(cfg: *mut ValseConfig, mode: ValseMode) -> ValseStatus {
    let c = deref!(mut cfg);
    c.0.mode = match mode {
        ValseMode::Full => Mode::Full,
        ValseMode::Point => Mode::Point,
    };
    ValseStatus::Ok
}

/// # Safety
/// `cfg` must be a live config handle or null.
#[no_mangle]
pub unsafe extern "C" fn valse_config_set_max_iters(cfg: *mut ValseConfig, iters: usize) -> ValseStatus {
    let c = deref!(mut cfg);
    if iters < 1 {
        return fail(ValseStatus::InvalidArgument, "max_iters must be >= 1");
    }
    c.0.max_iters = iters;
    ValseStatus::Ok
}

/// # Safety
/// `cfg` must be a live config handle or null.
#[no_mangle]
pub unsafe extern "C" fn valse_config_set_rel_tol(cfg: *mut ValseConfig, tol: f64) -> ValseStatus {
    let c = deref!(mut cfg);
    if tol.is_nan() || tol <= 0.0 {
        return fail(ValseStatus::InvalidArgument, format!("rel_tol must be > 0, got {tol}"));
    }
    c.0.rel_tol = tol;
    ValseStatus::Ok
}

/// Starting hyperparameters. With `learn` false they stay fixed.
///
/// # Safety
/// `cfg` must be a live config handle or null.
#[no_mangle]
pub unsafe extern "C" fn valse_config_set_hyperparams(
    cfg: *mut ValseConfig,
    nu: f64,
    rho: f64,
    tau: f64,
    learn: bool,
) -> ValseStatus {
    let c = deref!(mut cfg);
    match Hyperparams::new(nu, rho, tau) {
        Ok(b) => {
            c.0.beta = Some(b);
            c.0.learn_beta = learn;
            ValseStatus::Ok
        }
        Err(e) => fail(status_of(&e), e.to_string()),
    }
}

/// Run the estimator on `m` samples `re[i] + j im[i]` taken at `indices[i]`
/// of a length-`n` signal. `cfg` may be null for defaults. On success `*out`
/// receives a result handle.
///
/// # Safety
/// The three arrays must hold `m` readable elements, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn valse_estimate(
    cfg: *const ValseConfig,
    indices: *const usize,
    re: *const f64,
    im: *const f64,
    m: usize,
    n: usize,
    out: *mut *mut ValseResult,
) -> ValseStatus {
    if out.is_null() {
        return fail(ValseStatus::NullPointer, "out is null");
    }
    *out = ptr::null_mut();
    if m > 0 && (indices.is_null() || re.is_null() || im.is_null()) {
        return fail(ValseStatus::NullPointer, "sample arrays are null");
    }
    let default = EngineConfig::default();
    let config = cfg.as_ref().map_or(&default, |c| &c.0);
    let (idx, re, im) = if m == 0 {
        (&[][..], &[][..], &[][..])
    } else {
        (slice::from_raw_parts(indices, m), slice::from_raw_parts(re, m), slice::from_raw_parts(im, m))
    };
    guard(|| {
        let y = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let run = MeasurementSet::new(idx.to_vec(), n, y).and_then(|ms| engine::run(&ms, config));
        match run {
            Ok(r) => {
                *out = Box::into_raw(Box::new(ValseResult(r)));
                ValseStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `res` must come from [`valse_estimate`] and not be freed yet, or be null.
#[no_mangle]
pub unsafe extern "C" fn valse_result_free(res: *mut ValseResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Number of detected components, 0 for a null handle.
///
/// # Safety
/// `res` must be a live result handle or null.
#[no_mangle]
pub unsafe extern "C" fn valse_result_k_hat(res: *const ValseResult) -> usize {
    res.as_ref().map_or(0, |r| r.0.k_hat)
}

/// # Safety
/// `res` must be a live result handle or null.
#[no_mangle]
pub unsafe extern "C" fn valse_result_iterations(res: *const ValseResult) -> usize {
    res.as_ref().map_or(0, |r| r.0.iters)
}

/// # Safety
/// `res` must be a live result handle or null.
#[no_mangle]
pub unsafe extern "C" fn valse_result_converged(res: *const ValseResult) -> bool {
    res.as_ref().is_some_and(|r| r.0.converged)
}

/// Length of the reconstructed signal, 0 for a null handle.
///
/// # Safety
/// `res` must be a live result handle or null.
#[no_mangle]
pub unsafe extern "C" fn valse_result_signal_len(res: *const ValseResult) -> usize {
    res.as_ref().map_or(0, |r| r.0.x_hat.len())
}

/// # Safety
/// `res` must be a live result handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn valse_result_hyperparams(
    res: *const ValseResult,
    nu: *mut f64,
    rho: *mut f64,
    tau: *mut f64,
) -> ValseStatus {
    let r = deref!(res);
    if nu.is_null() || rho.is_null() || tau.is_null() {
        return fail(ValseStatus::NullPointer, "output pointer is null");
    }
    *nu = r.0.beta.nu;
    *rho = r.0.beta.rho;
    *tau = r.0.beta.tau;
    ValseStatus::Ok
}

unsafe fn copy_out(src: &[f64], dst: *mut f64, cap: usize) -> ValseStatus {
    if src.len() > cap {
        return fail(ValseStatus::InvalidArgument, format!("buffer holds {cap}, need {}", src.len()));
    }
    if !src.is_empty() {
        if dst.is_null() {
            return fail(ValseStatus::NullPointer, "output buffer is null");
        }
        ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    }
    ValseStatus::Ok
}

unsafe fn copy_complex(src: &[Complex64], re: *mut f64, im: *mut f64, cap: usize) -> ValseStatus {
    let (a, b): (Vec<f64>, Vec<f64>) = src.iter().map(|z| (z.re, z.im)).unzip();
    match copy_out(&a, re, cap) {
        ValseStatus::Ok => copy_out(&b, im, cap),
        s => s,
    }
}

/// Frequency estimates in `[-pi, pi)`. `cap` must be at least `k_hat`.
///
/// # Safety
/// `freqs` must have `cap` writable elements.
#[no_mangle]
pub unsafe extern "C" fn valse_result_frequencies(res: *const ValseResult, freqs: *mut f64, cap: usize) -> ValseStatus {
    let r = deref!(res);
    copy_out(&r.0.freqs, freqs, cap)
}

/// Weight estimates, aligned with the frequencies.
///
/// # Safety
/// `re` and `im` must have `cap` writable elements.
#[no_mangle]
pub unsafe extern "C" fn valse_result_amplitudes(
    res: *const ValseResult,
    re: *mut f64,
    im: *mut f64,
    cap: usize,
) -> ValseStatus {
    let r = deref!(res);
    copy_complex(&r.0.amps, re, im, cap)
}

/// Reconstructed signal over all `n` positions.
///
/// # Safety
/// `re` and `im` must have `cap` writable elements.
#[no_mangle]
pub unsafe extern "C" fn valse_result_signal(
    res: *const ValseResult,
    re: *mut f64,
    im: *mut f64,
    cap: usize,
) -> ValseStatus {
    let r = deref!(res);
    copy_complex(&r.0.x_hat, re, im, cap)
}

/// `I_p(kappa) / I_0(kappa)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn valse_bessel_ratio(p: i64, kappa: f64, out: *mut f64) -> ValseStatus {
    let o = deref!(mut out);
    guard(|| lift(circular::bessel_ratio(p, kappa).map(|v| *o = v)))
}

/// Concentration `k` with `I_m(k)/I_0(k) = I_1(kappa)/I_0(kappa)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn valse_solve_concentration(m: i64, kappa: f64, out: *mut f64) -> ValseStatus {
    let o = deref!(mut out);
    guard(|| lift(circular::solve_concentration(m, kappa).map(|v| *o = v)))
}
