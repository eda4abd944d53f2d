//! C ABI for herdwatch.
//!
//! Every entry point returns an [`HwStatus`]; on failure the message is
//! available from [`hw_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their `_free` function. Panics are
//! caught at the boundary and reported as [`HwStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use herdwatch::dataset::Sample;
use herdwatch::features::{build_feature_table, ExtractConfig, FeatureTable, WindowConfig};
use herdwatch::models::ModelArtifact;
use herdwatch::Error;

/// Result code of every `hw_*` call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Model = 5,
    Panic = 6,
}

/// A fitted classifier loaded from a model artifact.
pub struct HwModel {
    inner: ModelArtifact,
    classes: Vec<CString>,
    features: Vec<CString>,
}

/// A windowed feature table.
pub struct HwFeatureTable {
    inner: FeatureTable,
    columns: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(HwStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => HwStatus::Io,
            Error::Schema { .. } | Error::Format { .. } | Error::Truncated { .. } | Error::Checksum { .. } => {
                HwStatus::Format
            }
            Error::Model(_) | Error::Evaluation(_) | Error::UndefinedAuc(_) => HwStatus::Model,
            _ => HwStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(HwStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(HwStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            HwStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            HwStatus::Panic
        }
    }
}

unsafe fn slice_in<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn write_out<T>(p: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

unsafe fn str_in<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

fn c_strings(names: &[String]) -> Vec<CString> {
    names
        .iter()
        .map(|n| CString::new(n.replace('\0', " ")).expect("no interior NUL"))
        .collect()
}

/// Message of the last failed call on this thread, or null after a
/// successful call. Valid until the next `hw_*` call on this thread.
#[no_mangle]
pub extern "C" fn hw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Loads a JSON model artifact.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hw_model_load(path: *const c_char, out: *mut *mut HwModel) -> HwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = Path::new(str_in(path, "path")?);
        let f = File::open(path).map_err(|e| Failure(HwStatus::Io, format!("{}: {e}", path.display())))?;
        let inner = ModelArtifact::read_json(BufReader::new(f), &path.display().to_string())?;
        let model = HwModel {
            classes: c_strings(&inner.classes),
            features: c_strings(&inner.feature_names),
            inner,
        };
        out.write(Box::into_raw(Box::new(model)));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from [`hw_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hw_model_free(model: *mut HwModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

unsafe fn model_ref<'a>(model: *const HwModel) -> Result<&'a HwModel, Failure> {
    model.as_ref().ok_or_else(|| null("model"))
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hw_model_n_features(model: *const HwModel, out: *mut usize) -> HwStatus {
    guard(|| write_out(out, model_ref(model)?.inner.n_features(), "out"))
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hw_model_n_classes(model: *const HwModel, out: *mut usize) -> HwStatus {
    guard(|| write_out(out, model_ref(model)?.classes.len(), "out"))
}

/// Class label at `index`, in probability order. The string is owned by
/// the model.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hw_model_class_name(
    model: *const HwModel,
    index: usize,
    out: *mut *const c_char,
) -> HwStatus {
    guard(|| {
        let m = model_ref(model)?;
        let s = m
            .classes
            .get(index)
            .ok_or_else(|| invalid(format!("class index {index} out of range ({})", m.classes.len())))?;
        write_out(out, s.as_ptr(), "out")
    })
}

/// Feature column name at `index`. The string is owned by the model.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hw_model_feature_name(
    model: *const HwModel,
    index: usize,
    out: *mut *const c_char,
) -> HwStatus {
    guard(|| {
        let m = model_ref(model)?;
        let s = m
            .features
            .get(index)
            .ok_or_else(|| invalid(format!("feature index {index} out of range ({})", m.features.len())))?;
        write_out(out, s.as_ptr(), "out")
    })
}

/// Class probabilities for one feature row.
///
/// # Safety
/// `row` must hold `n_features` values and `out` room for `n_classes`.
#[no_mangle]
pub unsafe extern "C" fn hw_model_predict_proba(
    model: *const HwModel,
    row: *const f64,
    n_features: usize,
    out: *mut f64,
    n_classes: usize,
) -> HwStatus {
    guard(|| {
        let m = model_ref(model)?;
        if n_features != m.inner.n_features() {
            return Err(invalid(format!(
                "row has {n_features} features, model expects {}",
                m.inner.n_features()
            )));
        }
        if n_classes != m.classes.len() {
            return Err(invalid(format!(
                "output has room for {n_classes} classes, model has {}",
                m.classes.len()
            )));
        }
        let row = slice_in(row, n_features, "row")?;
        let out = slice_out(out, n_classes, "out")?;
        out.copy_from_slice(&m.inner.predict_proba(row));
        Ok(())
    })
}

/// Probabilities for every row of `table`, row-major into `out`
/// (`n_rows * n_classes` values). Columns are matched by name.
///
/// # Safety
/// Both handles must be live; `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn hw_model_predict_table(
    model: *const HwModel,
    table: *const HwFeatureTable,
    out: *mut f64,
    len: usize,
) -> HwStatus {
    guard(|| {
        let m = model_ref(model)?;
        let t = table_ref(table)?;
        let need = t.inner.n_rows() * m.classes.len();
        if len != need {
            return Err(invalid(format!("output length {len}, need {need}")));
        }
        let probs = m.inner.predict_table(&t.inner)?;
        let out = slice_out(out, len, "out")?;
        for (dst, p) in out.chunks_mut(m.classes.len().max(1)).zip(&probs) {
            dst.copy_from_slice(p);
        }
        Ok(())
    })
}

/// Windowed features (with lag columns) for one device's stream. Timestamps
/// are milliseconds and must be strictly increasing.
///
/// # Safety
/// `device_id` must be a NUL-terminated string, the four arrays must hold
/// `n` values each and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hw_extract_features(
    device_id: *const c_char,
    timestamps_ms: *const i64,
    acc_x: *const f64,
    acc_y: *const f64,
    acc_z: *const f64,
    n: usize,
    window_length: usize,
    step_length: usize,
    max_lag: usize,
    out: *mut *mut HwFeatureTable,
) -> HwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let device = str_in(device_id, "device_id")?;
        let ts = slice_in(timestamps_ms, n, "timestamps_ms")?;
        let (x, y, z) = (
            slice_in(acc_x, n, "acc_x")?,
            slice_in(acc_y, n, "acc_y")?,
            slice_in(acc_z, n, "acc_z")?,
        );
        let samples: Vec<Sample> = (0..n)
            .map(|i| Sample {
                device_id: device.to_string(),
                timestamp: ts[i],
                acc_x: x[i],
                acc_y: y[i],
                acc_z: z[i],
                label: None,
            })
            .collect();
        let config = ExtractConfig {
            window: WindowConfig {
                window_length,
                step_length,
                max_lag,
            },
            ..ExtractConfig::default()
        };
        let inner = build_feature_table(&samples, &config)?;
        let table = HwFeatureTable {
            columns: c_strings(&inner.column_names),
            inner,
        };
        out.write(Box::into_raw(Box::new(table)));
        Ok(())
    })
}

/// Releases a feature table. Null is ignored.
///
/// # Safety
/// `table` must come from [`hw_extract_features`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hw_table_free(table: *mut HwFeatureTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

unsafe fn table_ref<'a>(table: *const HwFeatureTable) -> Result<&'a HwFeatureTable, Failure> {
    table.as_ref().ok_or_else(|| null("table"))
}

/// # Safety
/// `table` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hw_table_n_rows(table: *const HwFeatureTable, out: *mut usize) -> HwStatus {
    guard(|| write_out(out, table_ref(table)?.inner.n_rows(), "out"))
}

/// # Safety
/// `table` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hw_table_n_cols(table: *const HwFeatureTable, out: *mut usize) -> HwStatus {
    guard(|| write_out(out, table_ref(table)?.inner.n_cols(), "out"))
}

/// Column name at `index`. The string is owned by the table.
///
/// # Safety
/// `table` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hw_table_column_name(
    table: *const HwFeatureTable,
    index: usize,
    out: *mut *const c_char,
) -> HwStatus {
    guard(|| {
        let t = table_ref(table)?;
        let s = t
            .columns
            .get(index)
            .ok_or_else(|| invalid(format!("column index {index} out of range ({})", t.columns.len())))?;
        write_out(out, s.as_ptr(), "out")
    })
}

/// Copies row `index` into `out`, which must hold `n_cols` values.
///
/// # Safety
/// `table` must be a live handle; `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn hw_table_row(
    table: *const HwFeatureTable,
    index: usize,
    out: *mut f64,
    len: usize,
) -> HwStatus {
    guard(|| {
        let t = table_ref(table)?;
        let row = t
            .inner
            .rows
            .get(index)
            .ok_or_else(|| invalid(format!("row index {index} out of range ({})", t.inner.n_rows())))?;
        if len != row.len() {
            return Err(invalid(format!("output length {len}, row has {}", row.len())));
        }
        slice_out(out, len, "out")?.copy_from_slice(row);
        Ok(())
    })
}

/// Two-sample Kolmogorov-Smirnov statistic.
///
/// # Safety
/// `a` and `b` must hold `na` and `nb` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hw_ks_statistic(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    out: *mut f64,
) -> HwStatus {
    guard(|| {
        let d = herdwatch::explain::ks_statistic(slice_in(a, na, "a")?, slice_in(b, nb, "b")?)?;
        write_out(out, d, "out")
    })
}

/// Savitzky-Golay smoothing of `n` values into `out` (also `n` values).
///
/// # Safety
/// `series` and `out` must hold `n` values each.
#[no_mangle]
pub unsafe extern "C" fn hw_savitzky_golay(
    series: *const f64,
    n: usize,
    window_length: usize,
    polyorder: usize,
    out: *mut f64,
) -> HwStatus {
    guard(|| {
        let y = herdwatch::signal::savitzky_golay(slice_in(series, n, "series")?, window_length, polyorder)?;
        slice_out(out, n, "out")?.copy_from_slice(&y);
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_out_pointer_is_reported() {
        let s = unsafe { hw_ks_statistic([1.0].as_ptr(), 1, [2.0].as_ptr(), 1, ptr::null_mut()) };
        assert_eq!(s, HwStatus::NullPointer);
        let msg = unsafe { CStr::from_ptr(hw_last_error_message()) };
        assert_eq!(msg.to_str().unwrap(), "out is null");
    }

    #[test]
    fn success_clears_the_error() {
        let mut d = 0.0;
        unsafe {
            hw_ks_statistic(ptr::null(), 0, ptr::null(), 0, &mut d);
            assert!(!hw_last_error_message().is_null());
            assert_eq!(hw_ks_statistic([0.0].as_ptr(), 1, [1.0].as_ptr(), 1, &mut d), HwStatus::Ok);
        }
        assert_eq!(d, 1.0);
        assert!(hw_last_error_message().is_null());
    }

    #[test]
    fn panics_are_caught() {
        assert_eq!(guard(|| panic!("boom")), HwStatus::Panic);
        let msg = unsafe { CStr::from_ptr(hw_last_error_message()) };
        assert_eq!(msg.to_str().unwrap(), "panic: boom");
    }
}
