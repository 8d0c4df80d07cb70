// SPDX-License-Identifier: Apache-2.0

//! C ABI over the detector, the trained feature extractor and the metrics.
//!
//! Every fallible function returns an [`EegadStatus`]; on failure a message is
//! kept per thread and can be copied out with [`eegad_last_error_message`].
//! Handles are opaque and must be released with their `_free` function.
//! Panics never cross the boundary; they surface as `EEGAD_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use eegad::detector::{decode_detector, encode_detector, GaussianDetector, ShrinkagePolicy};
use eegad::eval;
use eegad::nn::{decode_model, TwoBranchModel};
use eegad::{EegSegment, Error, Label};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EegadStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A configuration value was rejected.
    Config = 2,
    /// Input data was malformed, inconsistent or insufficient.
    Data = 3,
    /// Training diverged; same code as the command-line exit status.
    Divergence = 4,
    /// A serialized model or detector could not be decoded.
    Format = 5,
    /// Internal failure; the message names the cause.
    Panic = 6,
}

/// Fitted Gaussian detector.
pub struct EegadDetector(GaussianDetector);

/// Trained two-branch feature extractor.
pub struct EegadModel(TwoBranchModel<f32>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> EegadStatus {
    match err.root() {
        Error::Config(_) => EegadStatus::Config,
        Error::Divergence { .. } => EegadStatus::Divergence,
        Error::Format { .. } => EegadStatus::Format,
        _ => EegadStatus::Data,
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

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EegadStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EegadStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer passed for `{what}`"));
            EegadStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            EegadStatus::Panic
        }
    }
}

/// # Safety
/// `ptr` must be null or valid for `len` reads.
unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// # Safety
/// `ptr` must be null or valid for a write of `T`.
unsafe fn out<'a, T>(ptr: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or(Failure::Null(what))
}

/// # Safety
/// `ptr` must be null or point to a live handle of type `T`.
unsafe fn handle<'a, T>(ptr: *const T, what: &'static str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or(Failure::Null(what))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn eegad_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// always NUL-terminated when `cap > 0`). Returns the full message length in
/// bytes excluding the terminator; 0 if there is no message.
///
/// # Safety
/// `buf` must be null or valid for `cap` writes.
#[no_mangle]
pub unsafe extern "C" fn eegad_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && cap > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Fits a detector to `n` row-major feature vectors of length `d` with the
/// default shrinkage.
///
/// # Safety
/// `features` must be valid for `n * d` reads and `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn eegad_detector_fit(
    features: *const f64,
    n: usize,
    d: usize,
    out_detector: *mut *mut EegadDetector,
) -> EegadStatus {
    guard(|| {
        let out_detector = out(out_detector, "out_detector")?;
        if d == 0 {
            return Err(Error::InvalidInput("feature dimension is zero".into()).into());
        }
        let total = n
            .checked_mul(d)
            .ok_or(Error::InvalidInput("n * d overflows".into()))?;
        let rows: Vec<&[f64]> = slice(features, total, "features")?.chunks_exact(d).collect();
        let det = GaussianDetector::fit(&rows, ShrinkagePolicy::default())?;
        *out_detector = Box::into_raw(Box::new(EegadDetector(det)));
        Ok(())
    })
}

/// Decodes a detector from GDT1 bytes.
///
/// # Safety
/// `bytes` must be valid for `len` reads and `out_detector` for one write.
#[no_mangle]
pub unsafe extern "C" fn eegad_detector_load(
    bytes: *const u8,
    len: usize,
    out_detector: *mut *mut EegadDetector,
) -> EegadStatus {
    guard(|| {
        let out_detector = out(out_detector, "out_detector")?;
        let det = decode_detector(slice(bytes, len, "bytes")?)?;
        *out_detector = Box::into_raw(Box::new(EegadDetector(det)));
        Ok(())
    })
}

/// Serializes a detector as GDT1. With `buf` null or too small, only
/// `*out_len` is set (to the required size) and `EEGAD_STATUS_OK` returned
/// if `buf` is null, `EEGAD_STATUS_DATA` otherwise.
///
/// # Safety
/// `detector` must be a live handle, `buf` null or valid for `cap` writes,
/// `out_len` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn eegad_detector_save(
    detector: *const EegadDetector,
    buf: *mut u8,
    cap: usize,
    out_len: *mut usize,
) -> EegadStatus {
    guard(|| {
        let det = handle(detector, "detector")?;
        let out_len = out(out_len, "out_len")?;
        let bytes = encode_detector(&det.0);
        *out_len = bytes.len();
        if buf.is_null() {
            return Ok(());
        }
        if cap < bytes.len() {
            return Err(Error::InvalidInput(format!("buffer of {cap} bytes, need {}", bytes.len())).into());
        }
        std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
        Ok(())
    })
}

/// # Safety
/// `detector` must be a live handle and `out_dim` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn eegad_detector_dim(
    detector: *const EegadDetector,
    out_dim: *mut usize,
) -> EegadStatus {
    guard(|| {
        *out(out_dim, "out_dim")? = handle(detector, "detector")?.0.dim();
        Ok(())
    })
}

/// Mahalanobis distance of one feature vector of length `d`.
///
/// # Safety
/// `detector` must be a live handle, `features` valid for `d` reads and
/// `out_score` for one write.
#[no_mangle]
pub unsafe extern "C" fn eegad_detector_score(
    detector: *const EegadDetector,
    features: *const f64,
    d: usize,
    out_score: *mut f64,
) -> EegadStatus {
    guard(|| {
        let det = handle(detector, "detector")?;
        let out_score = out(out_score, "out_score")?;
        *out_score = det.0.score(slice(features, d, "features")?)?.value();
        Ok(())
    })
}

/// Releases a detector; null is ignored.
///
/// # Safety
/// `detector` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eegad_detector_free(detector: *mut EegadDetector) {
    if !detector.is_null() {
        drop(Box::from_raw(detector));
    }
}

/// Decodes a model from TBM1 bytes.
///
/// # Safety
/// `bytes` must be valid for `len` reads and `out_model` for one write.
#[no_mangle]
pub unsafe extern "C" fn eegad_model_load(
    bytes: *const u8,
    len: usize,
    out_model: *mut *mut EegadModel,
) -> EegadStatus {
    guard(|| {
        let out_model = out(out_model, "out_model")?;
        let model = decode_model(slice(bytes, len, "bytes")?)?;
        *out_model = Box::into_raw(Box::new(EegadModel(model)));
        Ok(())
    })
}

/// Input shape `(channels, length)` and feature length of a model.
///
/// # Safety
/// `model` must be a live handle; each output pointer valid for one write.
#[no_mangle]
pub unsafe extern "C" fn eegad_model_shape(
    model: *const EegadModel,
    out_channels: *mut usize,
    out_length: *mut usize,
    out_feature_dim: *mut usize,
) -> EegadStatus {
    guard(|| {
        let arch = &handle(model, "model")?.0.arch;
        *out(out_channels, "out_channels")? = arch.channels;
        *out(out_length, "out_length")? = arch.length;
        *out(out_feature_dim, "out_feature_dim")? = arch.feature_dim();
        Ok(())
    })
}

/// Features of one normalized segment (`channels * length` values,
/// channel-major) written to `out_features`, which holds `out_cap` floats.
///
/// # Safety
/// `model` must be a live handle, `data` valid for `channels * length`
/// reads and `out_features` for `out_cap` writes.
#[no_mangle]
pub unsafe extern "C" fn eegad_model_extract_features(
    model: *const EegadModel,
    data: *const f32,
    channels: usize,
    length: usize,
    out_features: *mut f32,
    out_cap: usize,
) -> EegadStatus {
    guard(|| {
        let model = &handle(model, "model")?.0;
        let total = channels
            .checked_mul(length)
            .ok_or(Error::InvalidInput("shape overflows".into()))?;
        let values = slice(data, total, "data")?.to_vec();
        let seg = EegSegment::new(values, channels, length, 1.0, Label::Normal, "")?;
        let features = model.extract_features(&seg)?;
        if out_cap < features.len() {
            return Err(Error::InvalidInput(format!(
                "output holds {out_cap} floats, need {}",
                features.len()
            ))
            .into());
        }
        if out_features.is_null() {
            return Err(Failure::Null("out_features"));
        }
        std::ptr::copy_nonoverlapping(features.as_ptr(), out_features, features.len());
        Ok(())
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eegad_model_free(model: *mut EegadModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// AUC with abnormal as the positive class and half credit for ties.
///
/// # Safety
/// Score arrays must be valid for their lengths; `out_auc` for one write.
#[no_mangle]
pub unsafe extern "C" fn eegad_auc(
    normals: *const f64,
    n_normals: usize,
    abnormals: *const f64,
    n_abnormals: usize,
    out_auc: *mut f64,
) -> EegadStatus {
    guard(|| {
        let out_auc = out(out_auc, "out_auc")?;
        *out_auc = eval::auc(
            slice(normals, n_normals, "normals")?,
            slice(abnormals, n_abnormals, "abnormals")?,
        )?;
        Ok(())
    })
}

/// Equal error rate, its threshold and the F1 score at that threshold.
///
/// # Safety
/// Score arrays must be valid for their lengths; each output for one write.
#[no_mangle]
pub unsafe extern "C" fn eegad_eer(
    normals: *const f64,
    n_normals: usize,
    abnormals: *const f64,
    n_abnormals: usize,
    out_eer: *mut f64,
    out_threshold: *mut f64,
    out_f1: *mut f64,
) -> EegadStatus {
    guard(|| {
        let n = slice(normals, n_normals, "normals")?;
        let a = slice(abnormals, n_abnormals, "abnormals")?;
        let (out_eer, out_threshold, out_f1) = (
            out(out_eer, "out_eer")?,
            out(out_threshold, "out_threshold")?,
            out(out_f1, "out_f1")?,
        );
        let e = eval::eer(n, a)?;
        *out_eer = e.eer;
        *out_threshold = e.threshold;
        *out_f1 = eval::f1_at_threshold(n, a, e.threshold);
        Ok(())
    })
}
