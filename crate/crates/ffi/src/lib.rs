//! C ABI over `loopforge`.
//!
//! Every function returns an `LfStatus`; results go through out-pointers. Handles are opaque
//! and must be released with the matching `*_free`. The message of the last failure on the
//! calling thread is available from `lf_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use loopforge::algebra::AlgebraTag;
use loopforge::loops::LoopContext;
use loopforge::report::Report;
use loopforge::suites::{self, Mode, VerifySettings};
use loopforge::tangent::bracket_closed;
use loopforge::variational::{FlowConfig, FlowState};
use loopforge::{AlgebraValue, Error};

/// Status codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    /// Division by zero or a singular system.
    Singular = 4,
    /// A consistency check failed inside the library.
    Numerical = 5,
    /// Output buffer too small; the required size is reported.
    BufferTooSmall = 6,
    Panic = 7,
}

/// Algebra selectors: the real dimension of the algebra.
pub const LF_ALGEBRA_C: u32 = 2;
pub const LF_ALGEBRA_H: u32 = 4;
pub const LF_ALGEBRA_O: u32 = 8;

fn tag_of(algebra: u32) -> Result<AlgebraTag, (LfStatus, String)> {
    match algebra {
        LF_ALGEBRA_C => Ok(AlgebraTag::C),
        LF_ALGEBRA_H => Ok(AlgebraTag::H),
        LF_ALGEBRA_O => Ok(AlgebraTag::O),
        _ => Err((LfStatus::InvalidArgument, format!("unknown algebra selector {algebra}"))),
    }
}

/// Loop arithmetic on the unit sphere of one algebra.
pub struct LfLoop {
    ctx: LoopContext,
}

/// Identity-check report.
pub struct LfReport {
    report: Report,
    json: String,
}

/// Energy-flow state on a flat torus.
pub struct LfFlow {
    ctx: LoopContext,
    state: Option<FlowState>,
    json: String,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> LfStatus {
    match e {
        Error::Dimension(_) | Error::TagMismatch(_) => LfStatus::Dimension,
        Error::Singular | Error::ZeroDivisor => LfStatus::Singular,
        Error::Config(_) | Error::Io(_) | Error::Unsupported(_) | Error::InvalidLieElement(_) | Error::InvalidPair(_) => {
            LfStatus::InvalidArgument
        }
        Error::NonFinite | Error::Consistency(_) => LfStatus::Numerical,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (LfStatus, String)>) -> LfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LfStatus::Ok,
        Ok(Err((s, m))) => {
            set_error(m);
            s
        }
        Err(p) => {
            let m = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(m);
            LfStatus::Panic
        }
    }
}

fn lib(e: Error) -> (LfStatus, String) {
    (status_of(&e), e.to_string())
}

fn null() -> (LfStatus, String) {
    (LfStatus::NullPointer, "null pointer argument".into())
}

unsafe fn read_value(tag: AlgebraTag, p: *const f64) -> Result<AlgebraValue<f64>, (LfStatus, String)> {
    if p.is_null() {
        return Err(null());
    }
    let v = std::slice::from_raw_parts(p, tag.dim()).to_vec();
    if v.iter().any(|x| !x.is_finite()) {
        return Err((LfStatus::InvalidArgument, "non-finite input".into()));
    }
    Ok(AlgebraValue::new(tag, v))
}

unsafe fn write_value(v: &AlgebraValue<f64>, out: *mut f64) -> Result<(), (LfStatus, String)> {
    if out.is_null() {
        return Err(null());
    }
    std::slice::from_raw_parts_mut(out, v.coords.len()).copy_from_slice(&v.coords);
    Ok(())
}

/// Copies `s` with a trailing NUL; `needed` receives the full size including the NUL.
unsafe fn write_str(s: &str, buf: *mut c_char, cap: usize, needed: *mut usize) -> Result<(), (LfStatus, String)> {
    let n = s.len() + 1;
    if !needed.is_null() {
        *needed = n;
    }
    if buf.is_null() || cap < n {
        return Err((LfStatus::BufferTooSmall, format!("buffer of {cap} bytes, {n} needed")));
    }
    ptr::copy_nonoverlapping(s.as_ptr(), buf as *mut u8, s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

/// Copies the last error message of this thread into `buf`.
///
/// # Safety
/// `buf` must point to `cap` writable bytes or be null; `needed` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lf_last_error(buf: *mut c_char, cap: usize, needed: *mut usize) -> LfStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    match write_str(&msg, buf, cap, needed) {
        Ok(()) => LfStatus::Ok,
        Err((s, _)) => s,
    }
}

/// Number of real coordinates of the algebra (2, 4 or 8); 0 for an unknown selector.
#[no_mangle]
pub extern "C" fn lf_algebra_dim(algebra: u32) -> usize {
    tag_of(algebra).map(|t| t.dim()).unwrap_or(0)
}

/// Creates a loop handle.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lf_loop_new(algebra: u32, out: *mut *mut LfLoop) -> LfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        *out = Box::into_raw(Box::new(LfLoop { ctx: LoopContext::new(tag_of(algebra)?) }));
        Ok(())
    })
}

/// # Safety
/// `h` must come from `lf_loop_new` and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lf_loop_free(h: *mut LfLoop) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

unsafe fn binary(
    h: *const LfLoop,
    p: *const f64,
    q: *const f64,
    out: *mut f64,
    op: fn(&LoopContext, &AlgebraValue<f64>, &AlgebraValue<f64>) -> loopforge::Result<AlgebraValue<f64>>,
) -> LfStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(null)?;
        let tag = h.ctx.tag;
        let (p, q) = (read_value(tag, p)?, read_value(tag, q)?);
        let r = op(&h.ctx, &p, &q).map_err(lib)?;
        write_value(&r, out)
    })
}

/// `out = p q`. Arrays hold `lf_algebra_dim` doubles.
///
/// # Safety
/// Pointers must reference arrays of the algebra's dimension.
#[no_mangle]
pub unsafe extern "C" fn lf_loop_mul(h: *const LfLoop, p: *const f64, q: *const f64, out: *mut f64) -> LfStatus {
    binary(h, p, q, out, |c, p, q| Ok(c.mul(p, q)))
}

/// `out = p / q`, the solution of `out q = p`.
///
/// # Safety
/// As for `lf_loop_mul`.
#[no_mangle]
pub unsafe extern "C" fn lf_loop_rdiv(h: *const LfLoop, p: *const f64, q: *const f64, out: *mut f64) -> LfStatus {
    binary(h, p, q, out, |c, p, q| c.rdiv(p, q))
}

/// `out = q \ p`, the solution of `q out = p`.
///
/// # Safety
/// As for `lf_loop_mul`.
#[no_mangle]
pub unsafe extern "C" fn lf_loop_ldiv(h: *const LfLoop, q: *const f64, p: *const f64, out: *mut f64) -> LfStatus {
    binary(h, q, p, out, |c, q, p| c.ldiv(q, p))
}

/// Tangent bracket `[ξ, η]^{(s)}` at the base point `s`; `ξ`, `η` and `out` are full-length arrays.
///
/// # Safety
/// As for `lf_loop_mul`.
#[no_mangle]
pub unsafe extern "C" fn lf_bracket(h: *const LfLoop, s: *const f64, xi: *const f64, eta: *const f64, out: *mut f64) -> LfStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(null)?;
        let tag = h.ctx.tag;
        let (s, xi, eta) = (read_value(tag, s)?, read_value(tag, xi)?, read_value(tag, eta)?);
        let r = bracket_closed(&h.ctx, &s, &xi, &eta).map_err(lib)?.im();
        write_value(&r, out)
    })
}

/// Runs the identity suites. `exact` selects rational arithmetic; `samples` is per identity.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lf_verify(algebra: u32, exact: bool, seed: u64, samples: usize, fields: bool, out: *mut *mut LfReport) -> LfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        if samples == 0 {
            return Err((LfStatus::InvalidArgument, "samples must be positive".into()));
        }
        let mut set = VerifySettings::new(tag_of(algebra)?, if exact { Mode::Exact } else { Mode::Float }, seed);
        set.samples = samples;
        set.fields = fields;
        let report = suites::verify(&set).map_err(lib)?;
        let json = serde_json::to_string_pretty(&report).map_err(|e| (LfStatus::Numerical, e.to_string()))?;
        *out = Box::into_raw(Box::new(LfReport { report, json }));
        Ok(())
    })
}

/// # Safety
/// `r` must come from `lf_verify`; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lf_report_free(r: *mut LfReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Whether every check passed, and the number of checks.
///
/// # Safety
/// `r` must be a live report; out-pointers must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn lf_report_summary(r: *const LfReport, passed: *mut bool, checks: *mut usize) -> LfStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(null)?;
        if !passed.is_null() {
            *passed = r.report.passed();
        }
        if !checks.is_null() {
            *checks = r.report.checks.len();
        }
        Ok(())
    })
}

/// The report as JSON.
///
/// # Safety
/// `buf` must hold `cap` bytes or be null (to query `needed`).
#[no_mangle]
pub unsafe extern "C" fn lf_report_json(r: *const LfReport, buf: *mut c_char, cap: usize, needed: *mut usize) -> LfStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(null)?;
        write_str(&r.json, buf, cap, needed)
    })
}

/// Seeded random start on `T^dim` with an `n^dim` grid.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lf_flow_new(algebra: u32, dim: usize, n: usize, seed: u64, out: *mut *mut LfFlow) -> LfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let (ctx, state) = suites::flow_state(tag_of(algebra)?, dim, n, seed, false).map_err(lib)?;
        *out = Box::into_raw(Box::new(LfFlow { ctx, state: Some(state), json: String::new() }));
        Ok(())
    })
}

/// # Safety
/// `h` must come from `lf_flow_new`; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lf_flow_free(h: *mut LfFlow) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Current energy.
///
/// # Safety
/// `h` must be live, `energy` writable.
#[no_mangle]
pub unsafe extern "C" fn lf_flow_energy(h: *const LfFlow, energy: *mut f64) -> LfStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(null)?;
        let st = h.state.as_ref().ok_or_else(|| (LfStatus::Numerical, "flow state lost".into()))?;
        if energy.is_null() {
            return Err(null());
        }
        *energy = st.energy(&h.ctx).map_err(lib)?;
        Ok(())
    })
}

/// Runs the energy flow from the current state; `converged` reports `‖(d^H)^*T‖_∞ < tol`.
/// The JSON report is kept on the handle for `lf_flow_report_json`.
///
/// # Safety
/// `h` must be live; `converged` and `iterations` writable or null.
#[no_mangle]
pub unsafe extern "C" fn lf_flow_run(h: *mut LfFlow, max_iterations: usize, tol: f64, converged: *mut bool, iterations: *mut usize) -> LfStatus {
    guard(|| {
        let h = h.as_mut().ok_or_else(null)?;
        let cfg = FlowConfig { max_iterations, tol, ..FlowConfig::default() };
        let st = h.state.take().ok_or_else(|| (LfStatus::Numerical, "flow state lost".into()))?;
        let keep = st.clone();
        match suites::flow_run(&h.ctx, st, &cfg) {
            Ok((rep, mut out)) => {
                h.json = serde_json::to_string_pretty(&rep).map_err(|e| (LfStatus::Numerical, e.to_string()))?;
                if !converged.is_null() {
                    *converged = rep.converged;
                }
                if !iterations.is_null() {
                    *iterations = rep.iterations;
                }
                out.history.clear();
                out.iterations = 0;
                h.state = Some(out);
                Ok(())
            }
            Err(e) => {
                h.state = Some(keep);
                Err(lib(e))
            }
        }
    })
}

/// JSON of the last `lf_flow_run`.
///
/// # Safety
/// As for `lf_report_json`.
#[no_mangle]
pub unsafe extern "C" fn lf_flow_report_json(h: *const LfFlow, buf: *mut c_char, cap: usize, needed: *mut usize) -> LfStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(null)?;
        write_str(&h.json, buf, cap, needed)
    })
}

/// Parses a `key = value` config and reports whether it is valid.
///
/// # Safety
/// `text` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lf_config_check(text: *const c_char) -> LfStatus {
    guard(|| {
        if text.is_null() {
            return Err(null());
        }
        let s = CStr::from_ptr(text).to_str().map_err(|e| (LfStatus::InvalidArgument, e.to_string()))?;
        loopforge::config::RunConfig::parse(s).map_err(lib)?;
        Ok(())
    })
}
