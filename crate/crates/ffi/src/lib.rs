//! C ABI over the `swnet` crate.
//!
//! Every entry point returns a [`SwnetStatus`]; on failure a message is
//! available from [`swnet_last_error`] on the same thread. Panics never cross
//! the boundary. Arrays are dense, row-major; RGB is channel-first `3 × H × W`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use ndarray::{Array2, Array3, ArrayView2};
use swnet::pipeline::predict::LoadedModel;
use swnet::Error;

/// Result codes shared by every function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SwnetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Shape = 3,
    Io = 4,
    Checkpoint = 5,
    Data = 6,
    Config = 7,
    Internal = 8,
}

/// One row of the evaluation table.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SwnetMetricReport {
    pub s_alpha: f64,
    pub f_w_beta: f64,
    pub mae: f64,
    pub e_adp: f64,
    pub e_mean: f64,
    pub e_max: f64,
    pub f_adp: f64,
    pub f_mean: f64,
    pub f_max: f64,
}

/// A trained network loaded from a checkpoint. Opaque to C.
pub struct SwnetModel {
    inner: LoadedModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SwnetStatus {
    match e {
        Error::Shape(_) => SwnetStatus::Shape,
        Error::Config(_) => SwnetStatus::Config,
        Error::Data(_) | Error::NonFinite { .. } => SwnetStatus::Data,
        Error::Io { .. } | Error::Image { .. } => SwnetStatus::Io,
        Error::Json(_) | Error::Checkpoint(_) => SwnetStatus::Checkpoint,
    }
}

struct Fail(SwnetStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SwnetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SwnetStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SwnetStatus::Internal
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(SwnetStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn dims(h: usize, w: usize) -> Result<usize, Fail> {
    if h == 0 || w == 0 {
        return Err(Fail(SwnetStatus::InvalidArgument, "height and width must be positive".into()));
    }
    h.checked_mul(w)
        .filter(|n| n.checked_mul(3).is_some())
        .ok_or_else(|| Fail(SwnetStatus::InvalidArgument, "image too large".into()))
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn swnet_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Loads a checkpoint file into a new model written to `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn swnet_model_load(path: *const c_char, out: *mut *mut SwnetModel) -> SwnetStatus {
    guard(|| {
        non_null(path, "path")?;
        non_null(out, "out")?;
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Fail(SwnetStatus::InvalidArgument, "path is not UTF-8".into()))?;
        let inner = LoadedModel::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(SwnetModel { inner }));
        Ok(())
    })
}

/// Releases a model; NULL is ignored.
///
/// # Safety
/// `model` must come from [`swnet_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn swnet_model_free(model: *mut SwnetModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Side length the network resamples inputs to.
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn swnet_model_input_side(model: *const SwnetModel, out: *mut usize) -> SwnetStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(out, "out")?;
        *out = (*model).inner.config.input_side;
        Ok(())
    })
}

/// Refined probability map for one image pair, written to `out` (`h × w`).
///
/// # Safety
/// `rgb` must hold `3·h·w` values in `[0, 1]`, `nir` and `out` `h·w` each.
#[no_mangle]
pub unsafe extern "C" fn swnet_model_predict(
    model: *const SwnetModel,
    rgb: *const f64,
    nir: *const f64,
    height: usize,
    width: usize,
    out: *mut f64,
) -> SwnetStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(rgb, "rgb")?;
        non_null(nir, "nir")?;
        non_null(out, "out")?;
        let n = dims(height, width)?;
        let rgb = std::slice::from_raw_parts(rgb, 3 * n);
        let nir = std::slice::from_raw_parts(nir, n);
        let rgb = Array3::from_shape_vec((3, height, width), rgb.to_vec()).expect("length checked");
        let nir = Array2::from_shape_vec((height, width), nir.to_vec()).expect("length checked");
        let map = (*model).inner.predict(&rgb, &nir)?;
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(map.as_slice().expect("standard layout"));
        Ok(())
    })
}

/// All nine metrics for one prediction (`h·w` values) against a 0/1 mask.
///
/// # Safety
/// `pred` and `gt` must hold `h·w` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn swnet_evaluate(
    pred: *const f64,
    gt: *const u8,
    height: usize,
    width: usize,
    out: *mut SwnetMetricReport,
) -> SwnetStatus {
    guard(|| {
        non_null(pred, "pred")?;
        non_null(gt, "gt")?;
        non_null(out, "out")?;
        let n = dims(height, width)?;
        let p = ArrayView2::from_shape((height, width), std::slice::from_raw_parts(pred, n)).expect("length checked");
        let g = ArrayView2::from_shape((height, width), std::slice::from_raw_parts(gt, n)).expect("length checked");
        let r = swnet::metrics::evaluate_pair(p, g)?;
        *out = SwnetMetricReport {
            s_alpha: r.s_alpha,
            f_w_beta: r.f_w_beta,
            mae: r.mae,
            e_adp: r.e_adp,
            e_mean: r.e_mean,
            e_max: r.e_max,
            f_adp: r.f_adp,
            f_mean: r.f_mean,
            f_max: r.f_max,
        };
        Ok(())
    })
}

/// Edge ground truth of a 0/1 mask with an odd window `k`, written to `out`.
///
/// # Safety
/// `mask` and `out` must hold `h·w` bytes.
#[no_mangle]
pub unsafe extern "C" fn swnet_derive_edge_gt(
    mask: *const u8,
    height: usize,
    width: usize,
    k: usize,
    out: *mut u8,
) -> SwnetStatus {
    guard(|| {
        non_null(mask, "mask")?;
        non_null(out, "out")?;
        let n = dims(height, width)?;
        let m = Array2::from_shape_vec((height, width), std::slice::from_raw_parts(mask, n).to_vec()).expect("length checked");
        let e = swnet::data::derive_edge_gt(&m, k)?;
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(e.as_slice().expect("standard layout"));
        Ok(())
    })
}
