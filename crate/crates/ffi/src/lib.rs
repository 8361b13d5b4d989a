//! C ABI for the `fedexprox` library.
//!
//! Problems and traces are opaque handles created and freed by this library. Every
//! fallible function returns an [`FxStatus`]; on failure a description of the error is
//! available from [`fx_last_error`] on the same thread. Strings returned through `char**`
//! out-parameters are owned by the caller and released with [`fx_string_free`].
//! Panics never cross the boundary: they are caught and reported as `FX_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fedexprox::algorithms::{self, AlgorithmConfig, RunStatus, RunTrace};
use fedexprox::envelope::EnvelopeContext;
use fedexprox::harness;
use fedexprox::linalg::Vector;
use fedexprox::problems::{self, FederatedProblem};
use fedexprox::Error;
use libc::{c_char, c_int};

/// Result codes. Validation and oracle codes match the CLI's exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FxStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad arguments, configuration or input data.
    Validation = 2,
    /// A numerical failure (singular prox system, non-converging estimate).
    Oracle = 3,
    Panic = 4,
}

/// A federated problem instance.
pub struct FxProblem {
    inner: FederatedProblem,
}

/// The result of a run.
pub struct FxTrace {
    inner: RunTrace,
}

/// One row of a trace. Row 0 describes the starting point and has `alpha = NaN`
/// and `sampled_len = 0`; row `k ≥ 1` describes `x_k` and the round that produced it.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FxTraceRow {
    pub k: usize,
    pub f_subopt: f64,
    pub env_subopt: f64,
    pub dist_sq: f64,
    pub alpha: f64,
    pub sampled_len: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> FxStatus {
    if e.is_validation() {
        FxStatus::Validation
    } else {
        FxStatus::Oracle
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type FfiResult<T> = Result<T, Failure>;

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> FxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            FxStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_last_error(&format!("null pointer: {what}"));
            FxStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(&harness::error_line(&e));
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            FxStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &'static str) -> FfiResult<&'a T> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn read_str<'a>(p: *const c_char, what: &'static str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Lib(Error::Config(format!("{what} is not valid UTF-8"))))
}

unsafe fn read_vec(p: *const f64, len: usize, what: &'static str) -> FfiResult<Vector> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(Vector::from_column_slice(std::slice::from_raw_parts(
        p, len,
    )))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &'static str) -> FfiResult<()> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    let c = CString::new(s).map_err(|_| Failure::Lib(Error::Io("string contains NUL".into())))?;
    write_out(out, c.into_raw(), "out")
}

fn check_buffer(len: usize, d: usize, what: &str) -> FfiResult<()> {
    if len != d {
        return Err(Failure::Lib(Error::Contract(format!(
            "{what} has length {len}, expected {d}"
        ))));
    }
    Ok(())
}

unsafe fn publish_problem(out: *mut *mut FxProblem, p: FederatedProblem) -> FfiResult<()> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    out.write(Box::into_raw(Box::new(FxProblem { inner: p })));
    Ok(())
}

/// Message of the last failed call on this thread, or an empty string. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn fx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Overparameterized least-squares regression with U[0,1) data; needs `d ≥ n·rows`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn fx_problem_regression(
    n: usize,
    rows_per_client: usize,
    d: usize,
    seed: u64,
    out: *mut *mut FxProblem,
) -> FxStatus {
    guard(|| publish_problem(out, problems::gen_regression(n, rows_per_client, d, seed)?))
}

/// The diagonal family `f_i(x) = (θ/2) x_i²` with `d = n`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn fx_problem_example1(
    n: usize,
    theta: f64,
    out: *mut *mut FxProblem,
) -> FxStatus {
    guard(|| publish_problem(out, problems::gen_example1(n, theta)?))
}

/// `n` affine sets through a common random point.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn fx_problem_feasibility(
    n: usize,
    d: usize,
    rows_per_set: usize,
    seed: u64,
    out: *mut *mut FxProblem,
) -> FxStatus {
    guard(|| publish_problem(out, problems::gen_feasibility(n, d, rows_per_set, seed)?))
}

/// Parses a problem in the `fedexprox-problem/v1` JSON format.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fx_problem_from_json(
    json: *const c_char,
    out: *mut *mut FxProblem,
) -> FxStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        publish_problem(out, FederatedProblem::from_json(text)?)
    })
}

/// Serializes a problem to JSON; free the result with [`fx_string_free`].
///
/// # Safety
/// `problem` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fx_problem_to_json(
    problem: *const FxProblem,
    out: *mut *mut c_char,
) -> FxStatus {
    guard(|| {
        let p = borrow(problem, "problem")?;
        write_string(out, p.inner.to_json()?)
    })
}

/// Releases a problem. Null is ignored.
///
/// # Safety
/// `problem` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fx_problem_free(problem: *mut FxProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Dimension `d`, or 0 for a null handle.
///
/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fx_problem_dim(problem: *const FxProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.inner.dim())
}

/// Number of clients `n`, or 0 for a null handle.
///
/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fx_problem_num_clients(problem: *const FxProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.inner.n())
}

/// `f(x) − f⋆` for the average objective.
///
/// # Safety
/// `x` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fx_problem_suboptimality(
    problem: *const FxProblem,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> FxStatus {
    guard(|| {
        let p = &borrow(problem, "problem")?.inner;
        check_buffer(len, p.dim(), "x")?;
        let x = read_vec(x, len, "x")?;
        write_out(out, p.objective(&x)? - p.f_star(), "out")
    })
}

unsafe fn client_context<'a>(
    p: &'a FederatedProblem,
    client: usize,
    gamma: f64,
) -> FfiResult<EnvelopeContext<'a>> {
    if client >= p.n() {
        return Err(Failure::Lib(Error::Contract(format!(
            "client {client} out of range for {} clients",
            p.n()
        ))));
    }
    Ok(EnvelopeContext::with_minima(
        &p.clients()[client..=client],
        gamma,
        vec![p.client_minima()[client]],
    )?)
}

/// `Prox_{γ f_i}(x)` written to `out` (length `len = d`).
///
/// # Safety
/// `x` and `out` must point to `len` doubles each.
#[no_mangle]
pub unsafe extern "C" fn fx_prox(
    problem: *const FxProblem,
    client: usize,
    gamma: f64,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> FxStatus {
    guard(|| {
        let p = &borrow(problem, "problem")?.inner;
        check_buffer(len, p.dim(), "x")?;
        let x = read_vec(x, len, "x")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let ctx = client_context(p, client, gamma)?;
        let z = ctx.prox(0, &x)?;
        ptr::copy_nonoverlapping(z.as_ptr(), out, len);
        Ok(())
    })
}

/// Moreau envelope value `M^γ_{f_i}(x)`.
///
/// # Safety
/// `x` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fx_moreau_value(
    problem: *const FxProblem,
    client: usize,
    gamma: f64,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> FxStatus {
    guard(|| {
        let p = &borrow(problem, "problem")?.inner;
        check_buffer(len, p.dim(), "x")?;
        let x = read_vec(x, len, "x")?;
        let ctx = client_context(p, client, gamma)?;
        write_out(out, ctx.moreau_value(0, &x)?, "out")
    })
}

/// Moreau envelope gradient `∇M^γ_{f_i}(x)` written to `out` (length `len = d`).
///
/// # Safety
/// `x` and `out` must point to `len` doubles each.
#[no_mangle]
pub unsafe extern "C" fn fx_moreau_grad(
    problem: *const FxProblem,
    client: usize,
    gamma: f64,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> FxStatus {
    guard(|| {
        let p = &borrow(problem, "problem")?.inner;
        check_buffer(len, p.dim(), "x")?;
        let x = read_vec(x, len, "x")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let ctx = client_context(p, client, gamma)?;
        let g = ctx.moreau_grad(0, &x)?;
        ptr::copy_nonoverlapping(g.as_ptr(), out, len);
        Ok(())
    })
}

/// Rate constants at `(γ, τ)` as a JSON object; `tau = 0` means full participation.
///
/// # Safety
/// `problem` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fx_rates(
    problem: *const FxProblem,
    gamma: f64,
    tau: usize,
    out: *mut *mut c_char,
) -> FxStatus {
    guard(|| {
        let p = &borrow(problem, "problem")?.inner;
        let tau = (tau != 0).then_some(tau);
        let report = harness::problem_rates(p, gamma, tau)?;
        write_string(out, serde_json::to_string(&report).map_err(Error::from)?)
    })
}

/// Runs one algorithm configuration, given as JSON with the fields of an algorithm
/// entry plus `iterations` (for example
/// `{"label":"opt","gamma":1.0,"alpha":{"policy":"optimal"},"iterations":100}`).
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fx_run(
    problem: *const FxProblem,
    config_json: *const c_char,
    out: *mut *mut FxTrace,
) -> FxStatus {
    guard(|| {
        let p = &borrow(problem, "problem")?.inner;
        let cfg: AlgorithmConfig =
            serde_json::from_str(read_str(config_json, "config_json")?).map_err(Error::from)?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let trace = algorithms::run(p, &cfg)?;
        out.write(Box::into_raw(Box::new(FxTrace { inner: trace })));
        Ok(())
    })
}

/// Releases a trace. Null is ignored.
///
/// # Safety
/// `trace` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fx_trace_free(trace: *mut FxTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of rows, including row 0 for the starting point; 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fx_trace_len(trace: *const FxTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.inner.rounds.len() + 1)
}

/// Row `i` of the trace.
///
/// # Safety
/// `trace` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fx_trace_row(
    trace: *const FxTrace,
    i: usize,
    out: *mut FxTraceRow,
) -> FxStatus {
    guard(|| {
        let t = &borrow(trace, "trace")?.inner;
        let row = if i == 0 {
            FxTraceRow {
                k: 0,
                f_subopt: t.initial.f_subopt,
                env_subopt: t.initial.env_subopt,
                dist_sq: t.initial.dist_sq,
                alpha: f64::NAN,
                sampled_len: 0,
            }
        } else {
            let r = t.rounds.get(i - 1).ok_or_else(|| {
                Failure::Lib(Error::Contract(format!(
                    "row {i} out of range for {} rows",
                    t.rounds.len() + 1
                )))
            })?;
            FxTraceRow {
                k: i,
                f_subopt: r.f_subopt,
                env_subopt: r.env_subopt,
                dist_sq: r.dist_sq_to_solution_set,
                alpha: r.alpha_used,
                sampled_len: r.sampled.len(),
            }
        };
        write_out(out, row, "out")
    })
}

/// Copies the clients sampled in the round that produced row `i` (0-based indices)
/// into `out`, which must hold `cap ≥ sampled_len` entries.
///
/// # Safety
/// `trace` must be a live handle; `out` must point to `cap` writable entries.
#[no_mangle]
pub unsafe extern "C" fn fx_trace_sampled(
    trace: *const FxTrace,
    i: usize,
    out: *mut usize,
    cap: usize,
) -> FxStatus {
    guard(|| {
        let t = &borrow(trace, "trace")?.inner;
        let sampled: &[usize] = match i {
            0 => &[],
            _ => {
                &t.rounds
                    .get(i - 1)
                    .ok_or_else(|| Failure::Lib(Error::Contract(format!("row {i} out of range"))))?
                    .sampled
            }
        };
        if sampled.len() > cap {
            return Err(Failure::Lib(Error::Contract(format!(
                "buffer holds {cap} entries, row {i} needs {}",
                sampled.len()
            ))));
        }
        if !sampled.is_empty() {
            if out.is_null() {
                return Err(Failure::Null("out"));
            }
            ptr::copy_nonoverlapping(sampled.as_ptr(), out, sampled.len());
        }
        Ok(())
    })
}

/// Final iterate written to `out` (length `len = d`).
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fx_trace_final_iterate(
    trace: *const FxTrace,
    out: *mut f64,
    len: usize,
) -> FxStatus {
    guard(|| {
        let x = &borrow(trace, "trace")?.inner.final_iterate;
        check_buffer(len, x.len(), "out")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        ptr::copy_nonoverlapping(x.as_ptr(), out, len);
        Ok(())
    })
}

/// Whether the run halted early (`*converged = 1`) and, if so, after how many rounds.
///
/// # Safety
/// `trace` must be a live handle; both out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn fx_trace_status(
    trace: *const FxTrace,
    converged: *mut c_int,
    after_rounds: *mut usize,
) -> FxStatus {
    guard(|| {
        let t = &borrow(trace, "trace")?.inner;
        let (flag, rounds) = match t.status {
            RunStatus::Completed => (0, t.rounds.len()),
            RunStatus::Converged { after_rounds, .. } => (1, after_rounds),
        };
        write_out(converged, flag, "converged")?;
        write_out(after_rounds, rounds, "after_rounds")
    })
}

/// `α` used in every round after resolving constant policies; NaN for adaptive policies.
///
/// # Safety
/// `trace` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fx_trace_resolved_alpha(trace: *const FxTrace, out: *mut f64) -> FxStatus {
    guard(|| {
        let t = &borrow(trace, "trace")?.inner;
        write_out(out, t.resolved_alpha.unwrap_or(f64::NAN), "out")
    })
}
