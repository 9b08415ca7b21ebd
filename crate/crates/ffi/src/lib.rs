//! C ABI over the varex solvers.
//!
//! Problems and reports are opaque handles created from a TOML run config.
//! Every fallible call returns a [`VarexStatus`]; the message of the most
//! recent failure on the calling thread is available from
//! [`varex_last_error`]. Handles must be released with their `_free`
//! function and are not thread-safe.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use varex::cli::{self, Failure, RunConfig};
use varex::energy::ProblemSpec;
use varex::space::NormContext;

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarexStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Precondition = 4,
    Solver = 5,
    LengthMismatch = 6,
    Panic = 7,
}

/// Parsed config plus the assembled problem.
pub struct VarexProblem {
    config: RunConfig,
    problem: ProblemSpec,
}

/// Outcome of [`varex_solve`].
pub struct VarexReport {
    exit_code: i32,
    json: CString,
    summary: CString,
    solution: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(VarexStatus, String);

impl From<Failure> for Fail {
    fn from(f: Failure) -> Self {
        let status = match f {
            Failure::Config(_) | Failure::Io(_) => VarexStatus::Config,
            Failure::Precondition(_) => VarexStatus::Precondition,
            Failure::Solver(_) => VarexStatus::Solver,
        };
        Fail(status, f.to_string())
    }
}

impl From<varex::Error> for Fail {
    fn from(e: varex::Error) -> Self {
        match e {
            varex::Error::LengthMismatch { .. } => Fail(VarexStatus::LengthMismatch, e.to_string()),
            e => Failure::from(e).into(),
        }
    }
}

/// Runs `body`, recording failures and panics in the thread's last error.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> VarexStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => VarexStatus::Ok,
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            VarexStatus::Panic
        }
    }
}

fn null(name: &str) -> Fail {
    Fail(VarexStatus::NullPointer, format!("{name} is null"))
}

unsafe fn text<'a>(s: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(name));
    }
    // SAFETY: caller passes a NUL-terminated string.
    unsafe { CStr::from_ptr(s) }
        .to_str()
        .map_err(|_| Fail(VarexStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn problem<'a>(p: *const VarexProblem) -> Result<&'a VarexProblem, Fail> {
    // SAFETY: non-null handles come from varex_problem_new.
    unsafe { p.as_ref() }.ok_or_else(|| null("problem"))
}

unsafe fn field<'a>(p: &VarexProblem, u: *const f64, len: usize) -> Result<&'a [f64], Fail> {
    if u.is_null() {
        return Err(null("u"));
    }
    let n = p.problem.mesh().num_nodes();
    if len != n {
        return Err(Fail(
            VarexStatus::LengthMismatch,
            format!("field has {len} values, mesh has {n} nodes"),
        ));
    }
    // SAFETY: caller guarantees `len` readable doubles.
    Ok(unsafe { std::slice::from_raw_parts(u, len) })
}

unsafe fn out_slice<'a>(out: *mut f64, len: usize, want: usize) -> Result<&'a mut [f64], Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    if len < want {
        return Err(Fail(
            VarexStatus::LengthMismatch,
            format!("output buffer holds {len} values, {want} needed"),
        ));
    }
    // SAFETY: caller guarantees `len` writable doubles.
    Ok(unsafe { std::slice::from_raw_parts_mut(out, want) })
}

unsafe fn write<T>(out: *mut T, value: T, name: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(name));
    }
    // SAFETY: checked non-null; caller provides a valid slot.
    unsafe { out.write(value) };
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn varex_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn varex_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a TOML run config and assembles its problem.
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` a valid pointer slot.
#[no_mangle]
pub unsafe extern "C" fn varex_problem_new(config: *const c_char, out: *mut *mut VarexProblem) -> VarexStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let src = unsafe { text(config, "config") }?;
        let config = cli::parse_config(src).map_err(Failure::from)?;
        let problem = config.problem()?;
        let handle = Box::into_raw(Box::new(VarexProblem { config, problem }));
        unsafe { write(out, handle, "out") }
    })
}

/// Releases a problem handle; NULL is ignored.
///
/// # Safety
/// `p` must come from [`varex_problem_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn varex_problem_free(p: *mut VarexProblem) {
    if !p.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Number of mesh nodes, i.e. the length of every field.
///
/// # Safety
/// `p` must be a live handle and `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn varex_problem_num_nodes(p: *const VarexProblem, out: *mut usize) -> VarexStatus {
    guard(|| {
        let p = unsafe { problem(p) }?;
        unsafe { write(out, p.problem.mesh().num_nodes(), "out") }
    })
}

/// Node coordinates as interleaved (x, y) pairs; `len` counts doubles and
/// must be at least twice the node count.
///
/// # Safety
/// `out` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn varex_problem_nodes(p: *const VarexProblem, out: *mut f64, len: usize) -> VarexStatus {
    guard(|| {
        let p = unsafe { problem(p) }?;
        let nodes = p.problem.mesh().nodes();
        let dst = unsafe { out_slice(out, len, 2 * nodes.len()) }?;
        for (d, n) in dst.chunks_exact_mut(2).zip(nodes) {
            d.copy_from_slice(n);
        }
        Ok(())
    })
}

/// phi(u).
///
/// # Safety
/// `u` must hold `len` doubles; `out` must be a valid slot.
#[no_mangle]
pub unsafe extern "C" fn varex_energy(p: *const VarexProblem, u: *const f64, len: usize, out: *mut f64) -> VarexStatus {
    guard(|| {
        let p = unsafe { problem(p) }?;
        let u = unsafe { field(p, u, len) }?;
        let phi = p.problem.phi(u)?;
        unsafe { write(out, phi, "out") }
    })
}

/// Nodal coefficients of phi'(u) into `out` (`out_len` >= node count).
///
/// # Safety
/// `u` must hold `len` doubles and `out` `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn varex_gradient(
    p: *const VarexProblem,
    u: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> VarexStatus {
    guard(|| {
        let p = unsafe { problem(p) }?;
        let u = unsafe { field(p, u, len) }?;
        let g = p.problem.energy_gradient(u)?;
        unsafe { out_slice(out, out_len, g.len()) }?.copy_from_slice(&g);
        Ok(())
    })
}

/// Dual H1 norm of phi'(u).
///
/// # Safety
/// `u` must hold `len` doubles; `out` must be a valid slot.
#[no_mangle]
pub unsafe extern "C" fn varex_residual(p: *const VarexProblem, u: *const f64, len: usize, out: *mut f64) -> VarexStatus {
    guard(|| {
        let p = unsafe { problem(p) }?;
        let u = unsafe { field(p, u, len) }?;
        let r = p.problem.residual_norm(&p.problem.energy_gradient(u)?)?;
        unsafe { write(out, r, "out") }
    })
}

/// X norm |u|_{1,p1} + |u|_{1,p2}.
///
/// # Safety
/// `u` must hold `len` doubles; `out` must be a valid slot.
#[no_mangle]
pub unsafe extern "C" fn varex_x_norm(p: *const VarexProblem, u: *const f64, len: usize, out: *mut f64) -> VarexStatus {
    guard(|| {
        let p = unsafe { problem(p) }?;
        let u = unsafe { field(p, u, len) }?;
        let prob = &p.problem;
        let n = NormContext::new(&[prob.p1(), prob.p2()], prob.order())?.norm(u)?;
        unsafe { write(out, n, "out") }
    })
}

/// Runs the config's mode without writing files. A non-zero report exit code
/// (non-convergence) is still `VAREX_STATUS_OK`; inspect it with
/// [`varex_report_exit_code`].
///
/// # Safety
/// `p` must be a live handle and `out` a valid pointer slot.
#[no_mangle]
pub unsafe extern "C" fn varex_solve(p: *const VarexProblem, out: *mut *mut VarexReport) -> VarexStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = unsafe { problem(p) }?;
        let produced = cli::execute(&p.config)?;
        let cstring = |v: Vec<u8>| CString::new(v).map_err(|_| Fail(VarexStatus::Solver, "NUL in report".into()));
        let report = VarexReport {
            exit_code: produced.exit_code,
            json: cstring(produced.json)?,
            summary: cstring(produced.summary.into_bytes())?,
            solution: produced.solution.unwrap_or_default(),
        };
        unsafe { write(out, Box::into_raw(Box::new(report)), "out") }
    })
}

/// Releases a report handle; NULL is ignored.
///
/// # Safety
/// `r` must come from [`varex_solve`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn varex_report_free(r: *mut VarexReport) {
    if !r.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(r) });
    }
}

/// CLI-style exit code: 0 ok, 2 not converged or suite failure. -1 for NULL.
///
/// # Safety
/// `r` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn varex_report_exit_code(r: *const VarexReport) -> i32 {
    // SAFETY: see above.
    unsafe { r.as_ref() }.map_or(-1, |r| r.exit_code)
}

/// report.json contents, owned by the handle. NULL for a NULL handle.
///
/// # Safety
/// `r` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn varex_report_json(r: *const VarexReport) -> *const c_char {
    // SAFETY: see above.
    unsafe { r.as_ref() }.map_or(ptr::null(), |r| r.json.as_ptr())
}

/// One-line summary, owned by the handle. NULL for a NULL handle.
///
/// # Safety
/// `r` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn varex_report_summary(r: *const VarexReport) -> *const c_char {
    // SAFETY: see above.
    unsafe { r.as_ref() }.map_or(ptr::null(), |r| r.summary.as_ptr())
}

/// Length of the primary solution field (0 for modes without one).
///
/// # Safety
/// `r` must be a live handle and `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn varex_report_solution_len(r: *const VarexReport, out: *mut usize) -> VarexStatus {
    guard(|| {
        // SAFETY: see above.
        let r = unsafe { r.as_ref() }.ok_or_else(|| null("report"))?;
        unsafe { write(out, r.solution.len(), "out") }
    })
}

/// Copies the primary solution field into `out`.
///
/// # Safety
/// `out` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn varex_report_solution(r: *const VarexReport, out: *mut f64, len: usize) -> VarexStatus {
    guard(|| {
        // SAFETY: see above.
        let r = unsafe { r.as_ref() }.ok_or_else(|| null("report"))?;
        unsafe { out_slice(out, len, r.solution.len()) }?.copy_from_slice(&r.solution);
        Ok(())
    })
}
