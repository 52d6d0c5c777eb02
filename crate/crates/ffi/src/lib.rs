//! C interface to the `fck` library.
//!
//! Matrices and models are opaque heap handles released with their `_free`
//! function. Every fallible call returns an [`FckStatus`]; on failure the
//! message is available from [`fck_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fck::data::load_transactions;
use fck::objectives::{Basket, BasketSpec, Logistic, LogisticSpec, MatrixObjective, MatrixSpec};
use fck::path::{predict, run_path, PathConfig};
use fck::{AtomicMatrix, DualObjective, FckError, PenaltyShape, PrimalModel, ScreenConfig, SolverConfig};
use nalgebra::DMatrix;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FckStatus {
    Ok = 0,
    /// A fit finished but the duality gap is above tolerance. The model
    /// output is still written.
    NotConverged = 1,
    NullPointer = 2,
    InvalidArgument = 3,
    Io = 4,
    Parse = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FckPenalty {
    Flat = 0,
    Geometric = 1,
    SuperGeometric = 2,
}

/// Shared fitting options. A `lambda` of zero or less runs a path of
/// `n_lambdas` points down to `lambda_min_ratio · λ_max` and returns the
/// last model.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FckFitOptions {
    pub lambda: f64,
    pub n_lambdas: usize,
    pub lambda_min_ratio: f64,
    pub penalty: FckPenalty,
    pub penalty_base: f64,
    pub penalty_exponent: f64,
    pub max_order: usize,
    pub kkt_tol: f64,
}

pub struct FckMatrix(AtomicMatrix);

pub struct FckModel(PrimalModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &FckError) -> FckStatus {
    match e {
        FckError::Io { .. } => FckStatus::Io,
        FckError::Csv(_) | FckError::Json(_) | FckError::NonNumeric { .. } | FckError::DuplicateItem { .. } => {
            FckStatus::Parse
        }
        _ => FckStatus::InvalidArgument,
    }
}

fn fail(status: FckStatus, msg: impl Into<String>) -> FckStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<FckStatus, (FckStatus, String)>) -> FckStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, msg))) => fail(s, msg),
        Err(_) => fail(FckStatus::Internal, "panic inside fck"),
    }
}

fn lift(e: FckError) -> (FckStatus, String) {
    (status_of(&e), e.to_string())
}

fn null() -> (FckStatus, String) {
    (FckStatus::NullPointer, "null pointer argument".into())
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> Result<&'a [f64], (FckStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, (FckStatus, String)> {
    p.as_ref().ok_or_else(null)
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into the library from this thread.
#[no_mangle]
pub extern "C" fn fck_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn fck_fit_options_default() -> FckFitOptions {
    FckFitOptions {
        lambda: 0.0,
        n_lambdas: 50,
        lambda_min_ratio: 1e-3,
        penalty: FckPenalty::Flat,
        penalty_base: 1.5,
        penalty_exponent: 1.5,
        max_order: 20,
        kkt_tol: 1e-6,
    }
}

/// Builds a matrix from row-major `n_rows × n_cols` values in `[0, 1]`.
/// All-binary input is stored sparsely.
///
/// # Safety
/// `values` must point to `n_rows * n_cols` doubles and `out` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn fck_matrix_from_dense(
    values: *const f64,
    n_rows: usize,
    n_cols: usize,
    out: *mut *mut FckMatrix,
) -> FckStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        if n_cols == 0 || n_rows == 0 {
            return Err((FckStatus::InvalidArgument, "matrix needs at least one row and column".into()));
        }
        let v = slice(values, n_rows * n_cols)?;
        let rows: Vec<Vec<f64>> = v.chunks(n_cols).map(<[f64]>::to_vec).collect();
        let a = AtomicMatrix::from_rows(&rows).map_err(lift)?;
        *out = Box::into_raw(Box::new(FckMatrix(a)));
        Ok(FckStatus::Ok)
    })
}

/// Reads a whitespace-separated transaction file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fck_matrix_from_transactions(path: *const c_char, out: *mut *mut FckMatrix) -> FckStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return Err(null());
        }
        let p = CStr::from_ptr(path).to_str().map_err(|e| (FckStatus::InvalidArgument, e.to_string()))?;
        let a = load_transactions(p).map_err(lift)?;
        *out = Box::into_raw(Box::new(FckMatrix(a)));
        Ok(FckStatus::Ok)
    })
}

/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fck_matrix_n_rows(m: *const FckMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.n_rows())
}

/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fck_matrix_n_cols(m: *const FckMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.n_cols())
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fck_matrix_free(m: *mut FckMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

fn shape_of(o: &FckFitOptions) -> Result<PenaltyShape, (FckStatus, String)> {
    let shape = match o.penalty {
        FckPenalty::Flat => PenaltyShape::Flat,
        FckPenalty::Geometric => PenaltyShape::Geometric { base: o.penalty_base },
        FckPenalty::SuperGeometric => PenaltyShape::SuperGeometric { base: o.penalty_base, exponent: o.penalty_exponent },
    };
    shape.validate().map_err(lift)?;
    Ok(shape)
}

fn fit_with<O: DualObjective>(
    obj: &O,
    a: &AtomicMatrix,
    opts: &FckFitOptions,
    out: *mut *mut FckModel,
) -> Result<FckStatus, (FckStatus, String)> {
    let shape = shape_of(opts)?;
    let single = opts.lambda > 0.0;
    let pcfg = PathConfig {
        n_lambdas: if single { 1 } else { opts.n_lambdas },
        lambda_min_ratio: opts.lambda_min_ratio,
        shape,
        lambdas: single.then(|| vec![opts.lambda]),
    };
    let scfg = ScreenConfig { max_order: opts.max_order, mode: obj.screen_mode(), ..ScreenConfig::default() };
    scfg.validate().map_err(lift)?;
    let cfg = SolverConfig { kkt_tol: opts.kkt_tol, ..SolverConfig::default() };
    cfg.validate().map_err(lift)?;
    let res = run_path(obj, a, &pcfg, &scfg, &cfg).map_err(lift)?;
    let last = res.points.last().ok_or((FckStatus::InvalidArgument, "empty λ grid".to_string()))?;
    let converged = last.converged;
    if !converged {
        set_error(format!("duality gap {:.3e} above tolerance at λ = {:.4e}", last.gap, last.lambda));
    }
    // SAFETY: checked non-null by the caller.
    unsafe { *out = Box::into_raw(Box::new(FckModel(last.model.clone()))) };
    Ok(if converged { FckStatus::Ok } else { FckStatus::NotConverged })
}

/// # Safety
/// Handles must be live; `opts` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fck_fit_basket(
    m: *const FckMatrix,
    tau: f64,
    gamma: f64,
    opts: *const FckFitOptions,
    out: *mut *mut FckModel,
) -> FckStatus {
    guard(|| {
        let (a, o) = (&handle(m)?.0, handle(opts)?);
        if out.is_null() {
            return Err(null());
        }
        let obj = Basket::new(BasketSpec { tau, gamma, nonneg_dual: true }, a).map_err(lift)?;
        fit_with(&obj, a, o, out)
    })
}

/// `labels` holds one 0/1 value per row.
///
/// # Safety
/// Handles must be live; `labels` must hold `n_rows` doubles.
#[no_mangle]
pub unsafe extern "C" fn fck_fit_logistic(
    m: *const FckMatrix,
    labels: *const f64,
    tau: f64,
    opts: *const FckFitOptions,
    out: *mut *mut FckModel,
) -> FckStatus {
    guard(|| {
        let (a, o) = (&handle(m)?.0, handle(opts)?);
        if out.is_null() {
            return Err(null());
        }
        let y = slice(labels, a.n_rows())?.to_vec();
        let obj = Logistic::new(LogisticSpec { labels: y, tau }, a).map_err(lift)?;
        fit_with(&obj, a, o, out)
    })
}

/// `responses` is column-major `n_rows × n_tasks`.
///
/// # Safety
/// Handles must be live; `responses` must hold `n_rows * n_tasks` doubles.
#[no_mangle]
pub unsafe extern "C" fn fck_fit_matrix(
    m: *const FckMatrix,
    responses: *const f64,
    n_tasks: usize,
    rho: f64,
    eta: f64,
    fit_intercept: bool,
    opts: *const FckFitOptions,
    out: *mut *mut FckModel,
) -> FckStatus {
    guard(|| {
        let (a, o) = (&handle(m)?.0, handle(opts)?);
        if out.is_null() {
            return Err(null());
        }
        let y = DMatrix::from_column_slice(a.n_rows(), n_tasks, slice(responses, a.n_rows() * n_tasks)?);
        let obj = MatrixObjective::new(MatrixSpec { responses: y, rho, eta, fit_intercept }, a).map_err(lift)?;
        fit_with(&obj, a, o, out)
    })
}

/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fck_model_n_active(model: *const FckModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.len())
}

/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fck_model_n_tasks(model: *const FckModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.n_tasks())
}

/// Writes `n_rows · n_tasks` predictions, column-major, into `out`.
///
/// # Safety
/// Handles must be live; `out` must have room for `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fck_predict(
    model: *const FckModel,
    m: *const FckMatrix,
    out: *mut f64,
    out_len: usize,
) -> FckStatus {
    guard(|| {
        let (model, a) = (&handle(model)?.0, &handle(m)?.0);
        if out.is_null() {
            return Err(null());
        }
        let p = predict(model, a).map_err(lift)?;
        if p.len() != out_len {
            return Err((FckStatus::InvalidArgument, format!("output buffer holds {out_len} values, need {}", p.len())));
        }
        std::slice::from_raw_parts_mut(out, out_len).copy_from_slice(&p);
        Ok(FckStatus::Ok)
    })
}

/// Serializes a model to JSON. Release the string with [`fck_string_free`].
///
/// # Safety
/// `model` must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fck_model_to_json(model: *const FckModel, out: *mut *mut c_char) -> FckStatus {
    guard(|| {
        let model = &handle(model)?.0;
        if out.is_null() {
            return Err(null());
        }
        let s = model.to_json().map_err(lift)?;
        *out = CString::new(s).map_err(|e| (FckStatus::Internal, e.to_string()))?.into_raw();
        Ok(FckStatus::Ok)
    })
}

/// # Safety
/// `json` must be NUL-terminated and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fck_model_from_json(json: *const c_char, out: *mut *mut FckModel) -> FckStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return Err(null());
        }
        let s = CStr::from_ptr(json).to_str().map_err(|e| (FckStatus::Parse, e.to_string()))?;
        let model = PrimalModel::from_json(s).map_err(lift)?;
        *out = Box::into_raw(Box::new(FckModel(model)));
        Ok(FckStatus::Ok)
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fck_model_free(model: *mut FckModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fck_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
