//! C ABI for the `msar` estimator.
//!
//! Every fallible function returns an [`MsarStatus`]; on failure a message is
//! available from [`msar_last_error`] on the same thread. Handles are opaque
//! and owned by the caller once returned; release them with the matching
//! `_free` function. Array outputs are written to caller buffers whose
//! capacity (in elements) is passed alongside.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use msar::io::FitSection;
use msar::regime::{
    e_step, em_fit, expected_duration, EmConfig, MsArFit, MsArSpec, TransitionMatrix, VarianceMode,
};
use msar::series::TimeSeries;
use msar::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsarStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InsufficientData = 3,
    EstimationFailed = 4,
    NumericalDegeneracy = 5,
    BufferTooSmall = 6,
    /// A Rust panic was caught at the boundary.
    Internal = 7,
}

/// Opaque observation series.
pub struct MsarSeries {
    inner: TimeSeries,
}

/// Opaque fitted MS-AR model with the smoothed regime probabilities of the
/// series it was fitted to.
pub struct MsarFit {
    fit: MsArFit,
    smoothed: Vec<Vec<f64>>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(err: &Error) -> MsarStatus {
    match err {
        Error::InsufficientData { .. } => MsarStatus::InsufficientData,
        Error::EstimationFailed(_) | Error::RankDeficient(_) => MsarStatus::EstimationFailed,
        Error::NumericalDegeneracy { .. } => MsarStatus::NumericalDegeneracy,
        _ => MsarStatus::InvalidArgument,
    }
}

fn fail(status: MsarStatus, msg: impl Into<String>) -> MsarStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> MsarStatus) -> MsarStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(MsarStatus::Internal, "internal panic"),
    }
}

fn from_result<T>(r: msar::Result<T>) -> Result<T, MsarStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

/// Copies `src` into `(buf, cap)`.
unsafe fn write_out(src: &[f64], buf: *mut f64, cap: usize) -> MsarStatus {
    if buf.is_null() {
        return fail(MsarStatus::NullPointer, "output buffer is null");
    }
    if cap < src.len() {
        return fail(
            MsarStatus::BufferTooSmall,
            format!("buffer holds {cap} values, {} needed", src.len()),
        );
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    MsarStatus::Ok
}

/// Message for the last failed call on this thread; empty after success.
/// The pointer stays valid until the next `msar_` call on this thread.
#[no_mangle]
pub extern "C" fn msar_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Copies `len` values into a new hourly series.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msar_series_new(
    values: *const f64,
    len: usize,
    out: *mut *mut MsarSeries,
) -> MsarStatus {
    guard(|| {
        if values.is_null() || out.is_null() {
            return fail(MsarStatus::NullPointer, "values or out is null");
        }
        let v = std::slice::from_raw_parts(values, len).to_vec();
        match from_result(TimeSeries::from_values(v)) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(MsarSeries { inner }));
                MsarStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// # Safety
/// `series` must come from [`msar_series_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn msar_series_free(series: *mut MsarSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Number of observations; 0 for a null handle.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn msar_series_len(series: *const MsarSeries) -> usize {
    series.as_ref().map_or(0, |s| s.inner.len())
}

/// EM fit of an MS(K)-AR(p) model. `shared_variance` non-zero ties the
/// innovation variance across regimes. `restarts` = 0 uses the default.
///
/// # Safety
/// `series` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msar_fit_em(
    series: *const MsarSeries,
    n_regimes: usize,
    ar_order: usize,
    shared_variance: i32,
    restarts: usize,
    seed: u64,
    out: *mut *mut MsarFit,
) -> MsarStatus {
    guard(|| {
        let (Some(series), false) = (series.as_ref(), out.is_null()) else {
            return fail(MsarStatus::NullPointer, "series or out is null");
        };
        let mode = if shared_variance != 0 {
            VarianceMode::Shared
        } else {
            VarianceMode::PerRegime
        };
        let mut config = EmConfig::with_seed(seed);
        if restarts > 0 {
            config.restarts = restarts;
        }
        let fitted = MsArSpec::new(n_regimes, ar_order, mode)
            .and_then(|spec| em_fit(&series.inner, spec, &config))
            .and_then(|fit| {
                let e = e_step(&fit, &series.inner)?;
                let smoothed = e.path.smoothed_marginals().expect("smoothed");
                Ok(MsarFit { fit, smoothed })
            });
        match from_result(fitted) {
            Ok(f) => {
                *out = Box::into_raw(Box::new(f));
                MsarStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// # Safety
/// `fit` must come from [`msar_fit_em`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn msar_fit_free(fit: *mut MsarFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn msar_fit_n_regimes(fit: *const MsarFit) -> usize {
    fit.as_ref().map_or(0, |f| f.fit.n_regimes())
}

/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn msar_fit_ar_order(fit: *const MsarFit) -> usize {
    fit.as_ref().map_or(0, |f| f.fit.ar_order())
}

/// Rows of smoothed probabilities: series length minus the AR order.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn msar_fit_n_steps(fit: *const MsarFit) -> usize {
    fit.as_ref().map_or(0, |f| f.smoothed.len())
}

/// # Safety
/// `fit` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn msar_fit_loglik(fit: *const MsarFit, out: *mut f64) -> MsarStatus {
    guard(|| match (fit.as_ref(), out.is_null()) {
        (Some(f), false) => {
            *out = f.fit.loglik;
            MsarStatus::Ok
        }
        _ => fail(MsarStatus::NullPointer, "fit or out is null"),
    })
}

unsafe fn with_fit(
    fit: *const MsarFit,
    buf: *mut f64,
    cap: usize,
    extract: impl FnOnce(&MsarFit) -> Result<Vec<f64>, MsarStatus>,
) -> MsarStatus {
    guard(|| {
        let Some(f) = fit.as_ref() else {
            return fail(MsarStatus::NullPointer, "fit is null");
        };
        match extract(f) {
            Ok(v) => write_out(&v, buf, cap),
            Err(s) => s,
        }
    })
}

/// Regime means, K values ordered ascending.
///
/// # Safety
/// `buf` must have room for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn msar_fit_means(
    fit: *const MsarFit,
    buf: *mut f64,
    cap: usize,
) -> MsarStatus {
    with_fit(fit, buf, cap, |f| Ok(f.fit.regime_means.clone()))
}

/// AR coefficients, K×p row-major (row j: regime j, column i: lag i+1).
///
/// # Safety
/// `buf` must have room for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn msar_fit_coefficients(
    fit: *const MsarFit,
    buf: *mut f64,
    cap: usize,
) -> MsarStatus {
    with_fit(fit, buf, cap, |f| Ok(f.fit.ar_coefficients.concat()))
}

/// Innovation variance per regime, K values (repeated when shared).
///
/// # Safety
/// `buf` must have room for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn msar_fit_variances(
    fit: *const MsarFit,
    buf: *mut f64,
    cap: usize,
) -> MsarStatus {
    with_fit(fit, buf, cap, |f| {
        Ok((0..f.fit.n_regimes()).map(|j| f.fit.variance(j)).collect())
    })
}

/// Transition matrix, K×K row-major, `p_ij` at `i*K + j`.
///
/// # Safety
/// `buf` must have room for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn msar_fit_transition(
    fit: *const MsarFit,
    buf: *mut f64,
    cap: usize,
) -> MsarStatus {
    with_fit(fit, buf, cap, |f| Ok(f.fit.transition.rows().concat()))
}

/// Expected duration `1/(1 − p_jj)` per regime.
///
/// # Safety
/// `buf` must have room for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn msar_fit_durations(
    fit: *const MsarFit,
    buf: *mut f64,
    cap: usize,
) -> MsarStatus {
    with_fit(fit, buf, cap, |f| {
        from_result(expected_duration(&f.fit.transition))
    })
}

/// Smoothed regime probabilities, (T−p)×K row-major; row τ is observation p+τ.
///
/// # Safety
/// `buf` must have room for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn msar_fit_smoothed_probabilities(
    fit: *const MsarFit,
    buf: *mut f64,
    cap: usize,
) -> MsarStatus {
    with_fit(fit, buf, cap, |f| Ok(f.smoothed.concat()))
}

/// AIC, BIC and HQC for a log-likelihood with `k` parameters and `n`
/// observations. Any output pointer may be null.
///
/// # Safety
/// Non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn msar_info_criteria(
    loglik: f64,
    k: usize,
    n: usize,
    aic: *mut f64,
    bic: *mut f64,
    hqc: *mut f64,
) -> MsarStatus {
    guard(
        || match from_result(msar::diagnostics::info_criteria(loglik, k, n)) {
            Ok(ic) => {
                for (p, v) in [(aic, ic.aic), (bic, ic.bic), (hqc, ic.hqc)] {
                    if !p.is_null() {
                        *p = v;
                    }
                }
                MsarStatus::Ok
            }
            Err(s) => s,
        },
    )
}

/// Expected durations for a K×K row-major transition matrix; writes K values.
///
/// # Safety
/// `transition` must hold `k*k` doubles and `out` room for `k`.
#[no_mangle]
pub unsafe extern "C" fn msar_expected_duration(
    transition: *const f64,
    k: usize,
    out: *mut f64,
) -> MsarStatus {
    guard(|| {
        if transition.is_null() || out.is_null() {
            return fail(MsarStatus::NullPointer, "transition or out is null");
        }
        if k == 0 {
            return fail(MsarStatus::InvalidArgument, "k must be positive");
        }
        let flat = std::slice::from_raw_parts(transition, k * k);
        let rows = flat.chunks(k).map(<[f64]>::to_vec).collect();
        match from_result(TransitionMatrix::new(rows).and_then(|m| expected_duration(&m))) {
            Ok(d) => write_out(&d, out, k),
            Err(s) => s,
        }
    })
}

/// JSON rendering of the fit as in the report's `chosen_fit` section.
/// Release with [`msar_string_free`].
///
/// # Safety
/// `fit` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn msar_fit_to_json(
    fit: *const MsarFit,
    out: *mut *mut c_char,
) -> MsarStatus {
    guard(|| {
        let (Some(f), false) = (fit.as_ref(), out.is_null()) else {
            return fail(MsarStatus::NullPointer, "fit or out is null");
        };
        match serde_json::to_string(&FitSection::from_fit(&f.fit)) {
            Ok(s) => {
                *out = CString::new(s).expect("JSON has no NUL").into_raw();
                MsarStatus::Ok
            }
            Err(e) => fail(MsarStatus::Internal, e.to_string()),
        }
    })
}

/// # Safety
/// `s` must come from an `msar_` function returning an owned string.
#[no_mangle]
pub unsafe extern "C" fn msar_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
