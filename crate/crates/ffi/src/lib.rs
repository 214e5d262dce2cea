//! C interface to `dirclust`.
//!
//! Objects are opaque handles created by `dc_*_new` (or `dc_cluster`) and
//! released with the matching `dc_*_free`. Every fallible call returns a
//! [`DcStatus`]; on failure a message for the calling thread is available
//! from [`dc_last_error_message`]. Strings returned by the library must be
//! released with [`dc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dirclust::bandwidth::{resolve, BandwidthChoice, SearchRange};
use dirclust::density::{DensityModel, Sample};
use dirclust::error::Error;
use dirclust::harness::export::tree_document;
use dirclust::labeling::adjusted_rand_index;
use dirclust::pipeline::{cluster, filtration, ClusterResult, PipelineConfig};
use dirclust::sphere::normalize;

/// Result codes shared by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was out of range or could not be parsed.
    InvalidArgument = 2,
    /// The input data cannot be processed (dimension mismatch, zero rows, ...).
    DataError = 3,
    /// A numerical procedure failed.
    NumericError = 4,
    /// An internal error; the library state is unchanged.
    Panic = 5,
}

/// Points on the unit sphere.
pub struct DcSample(Sample);

/// A density that can be evaluated at arbitrary points.
pub struct DcModel(DensityModel);

/// Result of a full clustering run.
pub struct DcClustering(ClusterResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DcStatus {
    if e.is_numeric() {
        DcStatus::NumericError
    } else if matches!(e, Error::InvalidArgument(_)) {
        DcStatus::InvalidArgument
    } else {
        DcStatus::DataError
    }
}

enum Fail {
    Null,
    Invalid(String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Runs `f`, recording any failure (including a panic) as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DcStatus::Ok,
        Ok(Err(Fail::Null)) => {
            set_error("null pointer argument".into());
            DcStatus::NullPointer
        }
        Ok(Err(Fail::Invalid(m))) => {
            set_error(m);
            DcStatus::InvalidArgument
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "internal error".into());
            set_error(msg);
            DcStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null)
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null)
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null);
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn string<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null);
    }
    CStr::from_ptr(p).to_str().map_err(|e| Fail::Invalid(format!("string is not UTF-8: {e}")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("JSON has no interior nul").into_raw()
}

/// Message describing the last failed call on this thread, or null. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a sample from `n` row-major rows of `d` coordinates. Rows are
/// scaled to unit length; a zero row is an error.
///
/// # Safety
/// `coords` must point to `n * d` doubles and `out_sample` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn dc_sample_new(coords: *const f64, n: usize, d: usize, out_sample: *mut *mut DcSample) -> DcStatus {
    guard(|| {
        let out_sample = out(out_sample)?;
        *out_sample = ptr::null_mut();
        if d < 2 || n == 0 {
            return Err(Fail::Invalid(format!("need n >= 1 and d >= 2, got n = {n}, d = {d}")));
        }
        let len = n.checked_mul(d).ok_or_else(|| Fail::Invalid("n * d overflows".into()))?;
        let data = slice(coords, len)?;
        let points = data.chunks_exact(d).map(normalize).collect::<Result<Vec<_>, _>>()?;
        *out_sample = Box::into_raw(Box::new(DcSample(Sample::new(points)?)));
        Ok(())
    })
}

/// # Safety
/// `sample` must be null or a handle from [`dc_sample_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dc_sample_free(sample: *mut DcSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `sample` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dc_sample_len(sample: *const DcSample) -> usize {
    sample.as_ref().map_or(0, |s| s.0.len())
}

/// Ambient dimension d, or 0 for a null handle.
///
/// # Safety
/// `sample` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dc_sample_dim(sample: *const DcSample) -> usize {
    sample.as_ref().map_or(0, |s| s.0.dim())
}

/// Kernel density estimate of `sample` with bandwidth `h` (concentration 1/h^2).
/// The model keeps its own copy of the sample.
///
/// # Safety
/// `sample` must be a live handle and `out_model` writable.
#[no_mangle]
pub unsafe extern "C" fn dc_kde_new(sample: *const DcSample, h: f64, out_model: *mut *mut DcModel) -> DcStatus {
    guard(|| {
        let out_model = out(out_model)?;
        *out_model = ptr::null_mut();
        let s = deref(sample)?;
        let m = DensityModel::kde(s.0.clone(), h)?;
        *out_model = Box::into_raw(Box::new(DcModel(m)));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from [`dc_kde_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dc_model_free(model: *mut DcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Density at the point `x` of length `d`, which is scaled to unit length first.
///
/// # Safety
/// `model` must be a live handle, `x` must point to `d` doubles and `out_density` be writable.
#[no_mangle]
pub unsafe extern "C" fn dc_model_density(model: *const DcModel, x: *const f64, d: usize, out_density: *mut f64) -> DcStatus {
    guard(|| {
        let out_density = out(out_density)?;
        let m = deref(model)?;
        let p = normalize(slice(x, d)?)?;
        *out_density = m.0.density(&p)?;
        Ok(())
    })
}

/// Bandwidth chosen by `selector` ("rot-circ", "rot-hyper", "lcv" or "lscv")
/// over the default search interval. A numeric string is returned as is.
///
/// # Safety
/// `sample` must be a live handle, `selector` a nul-terminated string and `out_h` writable.
#[no_mangle]
pub unsafe extern "C" fn dc_select_bandwidth(sample: *const DcSample, selector: *const c_char, out_h: *mut f64) -> DcStatus {
    guard(|| {
        let out_h = out(out_h)?;
        let s = deref(sample)?;
        let choice: BandwidthChoice = string(selector)?.parse()?;
        *out_h = resolve(&s.0, choice, SearchRange::default())?;
        Ok(())
    })
}

/// Full clustering with default settings and the given bandwidth (a selector
/// id or a number).
///
/// # Safety
/// `sample` must be a live handle, `bandwidth` a nul-terminated string and `out_clustering` writable.
#[no_mangle]
pub unsafe extern "C" fn dc_cluster(
    sample: *const DcSample,
    bandwidth: *const c_char,
    out_clustering: *mut *mut DcClustering,
) -> DcStatus {
    guard(|| {
        let out_clustering = out(out_clustering)?;
        *out_clustering = ptr::null_mut();
        let s = deref(sample)?;
        let config = PipelineConfig { bandwidth: string(bandwidth)?.parse()?, ..Default::default() };
        let r = cluster(&s.0, &config)?;
        *out_clustering = Box::into_raw(Box::new(DcClustering(r)));
        Ok(())
    })
}

/// # Safety
/// `clustering` must be null or a handle from [`dc_cluster`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dc_clustering_free(clustering: *mut DcClustering) {
    if !clustering.is_null() {
        drop(Box::from_raw(clustering));
    }
}

/// Number of groups found, or 0 for a null handle.
///
/// # Safety
/// `clustering` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dc_clustering_groups(clustering: *const DcClustering) -> usize {
    clustering.as_ref().map_or(0, |c| c.0.classification.labeling.k())
}

/// Bandwidth used, or NaN for a null handle.
///
/// # Safety
/// `clustering` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dc_clustering_bandwidth(clustering: *const DcClustering) -> f64 {
    clustering.as_ref().map_or(f64::NAN, |c| c.0.filtration.h)
}

/// Copies the 1-based group labels into `out_labels`, which must hold exactly
/// as many entries as the sample has points.
///
/// # Safety
/// `clustering` must be a live handle and `out_labels` point to `len` writable entries.
#[no_mangle]
pub unsafe extern "C" fn dc_clustering_labels(clustering: *const DcClustering, out_labels: *mut usize, len: usize) -> DcStatus {
    guard(|| {
        let c = deref(clustering)?;
        let labels = c.0.classification.labeling.labels();
        if len != labels.len() {
            return Err(Fail::Invalid(format!("buffer holds {len} labels, clustering has {}", labels.len())));
        }
        if out_labels.is_null() {
            return Err(Fail::Null);
        }
        std::slice::from_raw_parts_mut(out_labels, len).copy_from_slice(labels);
        Ok(())
    })
}

/// Adjusted Rand index between two labelings of length `n`.
///
/// # Safety
/// `a` and `b` must point to `n` entries each and `out_ari` be writable.
#[no_mangle]
pub unsafe extern "C" fn dc_ari(a: *const usize, b: *const usize, n: usize, out_ari: *mut f64) -> DcStatus {
    guard(|| {
        let out_ari = out(out_ari)?;
        *out_ari = adjusted_rand_index(slice(a, n)?, slice(b, n)?)?;
        Ok(())
    })
}

/// Cluster tree at bandwidth `h` as a JSON document (see `schemas/tree.json`).
/// Release the string with [`dc_string_free`].
///
/// # Safety
/// `sample` must be a live handle and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn dc_tree_json(sample: *const DcSample, h: f64, out_json: *mut *mut c_char) -> DcStatus {
    guard(|| {
        let out_json = out(out_json)?;
        *out_json = ptr::null_mut();
        let s = deref(sample)?;
        let f = filtration(&s.0, h, &PipelineConfig::default())?;
        let text = serde_json::to_string(&tree_document(&f)).map_err(|e| Fail::Invalid(e.to_string()))?;
        *out_json = into_c_string(text);
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
