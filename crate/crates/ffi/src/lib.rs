//! C interface to the thermobuck engine.
//!
//! Every function returns a [`TbStatus`]. On failure the message is kept per
//! thread and can be read with [`tb_last_error_message`]. Handles are opaque
//! and must be released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use thermobuck::buckling::solve_buckling;
use thermobuck::fem::Analysis;
use thermobuck::io::{load_problem, parse_problem_config, parse_problem_str, ProblemSpec};
use thermobuck::model::Model;
use thermobuck::optimizer::{OptimizationResult, Optimizer, Termination};
use thermobuck::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Solver = 5,
    Eigen = 6,
    Optimizer = 7,
    OutOfRange = 8,
    Panic = 99,
}

/// A parsed problem with its model built.
pub struct TbProblem {
    spec: ProblemSpec,
    model: Model,
}

/// Full-domain static and buckling state.
pub struct TbAnalysis {
    compliance: f64,
    load_factor: f64,
    displacement: Vec<f64>,
    mode: Vec<f64>,
}

/// Outcome of an optimization run.
pub struct TbResult {
    result: OptimizationResult,
}

/// One row of the iteration history.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TbHistoryRow {
    pub iter: usize,
    pub v: f64,
    pub j_over_j0: f64,
    pub p_over_p0: f64,
    pub lambda: f64,
    pub g1: f64,
    pub g2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub inner_steps: usize,
    pub wall_s: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> TbStatus {
    match err {
        Error::Config(_) => TbStatus::Config,
        Error::Io { .. } => TbStatus::Io,
        Error::NotConverged { .. } | Error::Singular(_) => TbStatus::Solver,
        Error::EigenNotConverged { .. } | Error::NoBuckling { .. } => TbStatus::Eigen,
        Error::InfeasibleStart { .. } | Error::UnreachableTarget { .. } => TbStatus::Optimizer,
        _ => TbStatus::InvalidArgument,
    }
}

/// Run `f`, converting errors and panics into a status and a stored message.
fn guard<F>(f: F) -> TbStatus
where
    F: FnOnce() -> Result<(), (TbStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            TbStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            TbStatus::Panic
        }
    }
}

fn engine(err: Error) -> (TbStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (TbStatus, String) {
    (TbStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, (TbStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| (TbStatus::InvalidArgument, format!("`{what}` is not valid UTF-8")))
}

unsafe fn reference<'a, T>(p: *const T, what: &str) -> Result<&'a T, (TbStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), (TbStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn problem(spec: ProblemSpec) -> Result<TbProblem, (TbStatus, String)> {
    let model = spec.build_model().map_err(engine)?;
    Ok(TbProblem { spec, model })
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn tb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Load a problem file from `path`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_problem_from_file(
    path: *const c_char,
    out: *mut *mut TbProblem,
) -> TbStatus {
    guard(|| {
        let p = text(path, "path")?;
        let spec = parse_problem_config(Path::new(p)).map_err(engine)?;
        store(out, problem(spec)?)
    })
}

/// Parse a problem from its text.
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_problem_from_str(
    config: *const c_char,
    out: *mut *mut TbProblem,
) -> TbStatus {
    guard(|| {
        let spec = parse_problem_str(text(config, "config")?).map_err(engine)?;
        store(out, problem(spec)?)
    })
}

/// Load a shipped fixture by name (a path is accepted as well).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_problem_from_fixture(
    name: *const c_char,
    out: *mut *mut TbProblem,
) -> TbStatus {
    guard(|| {
        let spec = load_problem(text(name, "name")?).map_err(engine)?;
        store(out, problem(spec)?)
    })
}

/// Element and DOF counts.
///
/// # Safety
/// `problem` must come from a `tb_problem_*` constructor; outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn tb_problem_size(
    problem: *const TbProblem,
    n_elements: *mut usize,
    n_dofs: *mut usize,
) -> TbStatus {
    guard(|| {
        let p = reference(problem, "problem")?;
        if let Some(n) = n_elements.as_mut() {
            *n = p.model.n_elements();
        }
        if let Some(n) = n_dofs.as_mut() {
            *n = p.model.n_dofs();
        }
        Ok(())
    })
}

/// Override the uniform temperature rise.
///
/// # Safety
/// `problem` must come from a `tb_problem_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tb_problem_set_delta_t(problem: *mut TbProblem, delta_t: f64) -> TbStatus {
    guard(|| {
        let p = problem.as_mut().ok_or_else(|| null("problem"))?;
        let mut spec = p.spec.clone();
        spec.loads.delta_t = delta_t;
        *p = self::problem(spec)?;
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or come from a `tb_problem_*` constructor, and not
/// be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tb_problem_free(problem: *mut TbProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Static and buckling analysis of the full domain.
///
/// # Safety
/// `problem` must be valid and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_analyze(problem: *const TbProblem, out: *mut *mut TbAnalysis) -> TbStatus {
    guard(|| {
        let p = reference(problem, "problem")?;
        let model = &p.model;
        let a = Analysis::new(model, vec![1.0; model.n_elements()], &p.spec.solver_config())
            .map_err(engine)?;
        let sol = solve_buckling(&a, &p.spec.eigen_config(None), None).map_err(engine)?;
        store(
            out,
            TbAnalysis {
                compliance: a.state.compliance,
                load_factor: sol.lambda,
                displacement: a.state.d,
                mode: sol.v,
            },
        )
    })
}

/// Compliance and load factor of an analysis; outputs may be null.
///
/// # Safety
/// `analysis` must come from [`tb_analyze`].
#[no_mangle]
pub unsafe extern "C" fn tb_analysis_values(
    analysis: *const TbAnalysis,
    compliance: *mut f64,
    load_factor: *mut f64,
) -> TbStatus {
    guard(|| {
        let a = reference(analysis, "analysis")?;
        if let Some(c) = compliance.as_mut() {
            *c = a.compliance;
        }
        if let Some(l) = load_factor.as_mut() {
            *l = a.load_factor;
        }
        Ok(())
    })
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), (TbStatus, String)> {
    if buf.is_null() {
        return Err(null("buffer"));
    }
    if len < src.len() {
        return Err((
            TbStatus::OutOfRange,
            format!("buffer holds {len} values; {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Copy the nodal displacements (one entry per DOF) into `buf`.
///
/// # Safety
/// `analysis` must be valid and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tb_analysis_displacement(
    analysis: *const TbAnalysis,
    buf: *mut f64,
    len: usize,
) -> TbStatus {
    guard(|| copy_out(&reference(analysis, "analysis")?.displacement, buf, len))
}

/// Copy the critical buckling mode (one entry per DOF) into `buf`.
///
/// # Safety
/// `analysis` must be valid and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tb_analysis_mode(
    analysis: *const TbAnalysis,
    buf: *mut f64,
    len: usize,
) -> TbStatus {
    guard(|| copy_out(&reference(analysis, "analysis")?.mode, buf, len))
}

/// # Safety
/// `analysis` must be null or come from [`tb_analyze`], and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tb_analysis_free(analysis: *mut TbAnalysis) {
    if !analysis.is_null() {
        drop(Box::from_raw(analysis));
    }
}

/// Run the volume-minimizing optimization.
///
/// # Safety
/// `problem` must be valid and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_optimize(problem: *const TbProblem, out: *mut *mut TbResult) -> TbStatus {
    guard(|| {
        let p = reference(problem, "problem")?;
        let opt = Optimizer::new(&p.model, p.spec.optimizer_settings(None)).map_err(engine)?;
        let result = opt.run(|_, _, _| Ok(())).map_err(engine)?;
        store(out, TbResult { result })
    })
}

/// Number of history rows (the full-domain row included) and whether the
/// run reached its target volume (1) or stopped on a vanishing step (0).
///
/// # Safety
/// `result` must come from [`tb_optimize`]; outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn tb_result_summary(
    result: *const TbResult,
    n_rows: *mut usize,
    target_reached: *mut i32,
) -> TbStatus {
    guard(|| {
        let r = &reference(result, "result")?.result;
        if let Some(n) = n_rows.as_mut() {
            *n = r.history.len();
        }
        if let Some(t) = target_reached.as_mut() {
            *t = i32::from(r.termination == Termination::TargetReached);
        }
        Ok(())
    })
}

/// History row `index`.
///
/// # Safety
/// `result` must be valid and `row` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_result_row(
    result: *const TbResult,
    index: usize,
    row: *mut TbHistoryRow,
) -> TbStatus {
    guard(|| {
        let r = &reference(result, "result")?.result;
        let h = r.history.get(index).ok_or_else(|| {
            (
                TbStatus::OutOfRange,
                format!("row {index} of {}", r.history.len()),
            )
        })?;
        let out = row.as_mut().ok_or_else(|| null("row"))?;
        *out = TbHistoryRow {
            iter: h.iter,
            v: h.v,
            j_over_j0: h.j_over_j0,
            p_over_p0: h.p_over_p0,
            lambda: h.lambda,
            g1: h.g1,
            g2: h.g2,
            mu1: h.mu1,
            mu2: h.mu2,
            gamma1: h.gamma1,
            gamma2: h.gamma2,
            inner_steps: h.inner_steps,
            wall_s: h.wall_s,
        };
        Ok(())
    })
}

/// Write the final topology (1 present, 0 void) into `buf`.
///
/// # Safety
/// `result` must be valid and `buf` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn tb_result_presence(
    result: *const TbResult,
    buf: *mut u8,
    len: usize,
) -> TbStatus {
    guard(|| {
        let p = &reference(result, "result")?.result.design.presence;
        if buf.is_null() {
            return Err(null("buffer"));
        }
        if len < p.len() {
            return Err((
                TbStatus::OutOfRange,
                format!("buffer holds {len} entries; {} needed", p.len()),
            ));
        }
        for (i, &x) in p.iter().enumerate() {
            *buf.add(i) = u8::from(x);
        }
        Ok(())
    })
}

/// # Safety
/// `result` must be null or come from [`tb_optimize`], and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tb_result_free(result: *mut TbResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
