//! C ABI for the fault identification toolkit.
//!
//! Handles are opaque pointers created and destroyed by this library; every
//! fallible call returns a [`FaultidStatus`] and writes results through out
//! pointers. [`faultid_last_error_message`] returns a thread-local
//! description of the most recent failure.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use faultid::gp::{GpSurface, SurfaceRecord};
use faultid::model::{FaultScenario, ResponseChannel, StructuralModel};

/// Result codes for every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultidStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Arguments failed validation (bad dimension, range, or UTF-8).
    InvalidArgument = 2,
    /// The dynamic stiffness matrix was singular at the requested frequency.
    Singular = 3,
    /// JSON parsing or serialization failed.
    Parse = 4,
    /// The callee panicked; the handle state is unchanged.
    Panic = 5,
}

/// Scalar channel of the complex admittance change.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultidChannel {
    Magnitude = 0,
    Real = 1,
    Imaginary = 2,
}

impl From<FaultidChannel> for ResponseChannel {
    fn from(channel: FaultidChannel) -> Self {
        match channel {
            FaultidChannel::Magnitude => ResponseChannel::Magnitude,
            FaultidChannel::Real => ResponseChannel::Real,
            FaultidChannel::Imaginary => ResponseChannel::Imaginary,
        }
    }
}

/// Opaque structural model handle.
pub struct FaultidModel {
    inner: StructuralModel,
}

/// Opaque fitted response-surface handle.
pub struct FaultidSurface {
    inner: GpSurface,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(status: FaultidStatus, message: &str) -> FaultidStatus {
    set_error(message);
    status
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn faultid_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn faultid_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

fn guarded(body: impl FnOnce() -> FaultidStatus) -> FaultidStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(FaultidStatus::Panic, "internal panic"),
    }
}

unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Result<&'a str, FaultidStatus> {
    if ptr.is_null() {
        return Err(FaultidStatus::NullArgument);
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| FaultidStatus::InvalidArgument)
}

/// Build a uniform chain model. `coupling_segment` is 1-based.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn faultid_model_new_uniform(
    segments: usize,
    mass: f64,
    stiffness: f64,
    rayleigh_a: f64,
    rayleigh_b: f64,
    coupling_segment: usize,
    coupling_strength: f64,
    k_c: f64,
    out: *mut *mut FaultidModel,
) -> FaultidStatus {
    guarded(|| {
        if out.is_null() {
            return fail(FaultidStatus::NullArgument, "out pointer is null");
        }
        match StructuralModel::uniform(
            segments,
            mass,
            stiffness,
            rayleigh_a,
            rayleigh_b,
            coupling_segment,
            coupling_strength,
            k_c,
        ) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(FaultidModel { inner }));
                FaultidStatus::Ok
            }
            Err(e) => fail(FaultidStatus::InvalidArgument, &e.to_string()),
        }
    })
}

/// Deserialize a model from its JSON form (the same document the pipeline
/// writes as `model.json`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn faultid_model_from_json(
    json: *const c_char,
    out: *mut *mut FaultidModel,
) -> FaultidStatus {
    guarded(|| {
        if out.is_null() {
            return fail(FaultidStatus::NullArgument, "out pointer is null");
        }
        let text = match utf8_arg(json) {
            Ok(t) => t,
            Err(status) => return fail(status, "json argument invalid"),
        };
        match serde_json::from_str::<StructuralModel>(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(FaultidModel { inner }));
                FaultidStatus::Ok
            }
            Err(e) => fail(FaultidStatus::Parse, &e.to_string()),
        }
    })
}

/// Destroy a model handle; a null pointer is a no-op.
///
/// # Safety
/// `model` must have been created by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn faultid_model_free(model: *mut FaultidModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of segments, or 0 for a null handle.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn faultid_model_segments(model: *const FaultidModel) -> usize {
    if model.is_null() {
        return 0;
    }
    (*model).inner.n_segments()
}

fn single_fault(
    model: &StructuralModel,
    segment: usize,
    severity: f64,
) -> Result<FaultScenario, FaultidStatus> {
    if severity == 0.0 {
        return Ok(FaultScenario::healthy(model.n_segments()));
    }
    FaultScenario::single(segment, severity, model.n_segments()).map_err(|e| {
        set_error(&e.to_string());
        FaultidStatus::InvalidArgument
    })
}

/// Complex admittance of the (possibly faulted) structure at `omega`.
/// A zero severity means the healthy structure regardless of `segment`.
///
/// # Safety
/// `model` must be a live handle; `out_re`/`out_im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn faultid_model_admittance(
    model: *const FaultidModel,
    omega: f64,
    segment: usize,
    severity: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> FaultidStatus {
    guarded(|| {
        if model.is_null() || out_re.is_null() || out_im.is_null() {
            return fail(FaultidStatus::NullArgument, "null argument");
        }
        let inner = &(*model).inner;
        let fault = match single_fault(inner, segment, severity) {
            Ok(f) => f,
            Err(status) => return status,
        };
        match inner.admittance(omega, &fault) {
            Ok(y) => {
                *out_re = y.re;
                *out_im = y.im;
                FaultidStatus::Ok
            }
            Err(e @ faultid::model::ModelError::SingularDynamicStiffness { .. }) => {
                fail(FaultidStatus::Singular, &e.to_string())
            }
            Err(e) => fail(FaultidStatus::InvalidArgument, &e.to_string()),
        }
    })
}

/// Scalar admittance-change response for a single fault.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn faultid_model_admittance_change(
    model: *const FaultidModel,
    omega: f64,
    segment: usize,
    severity: f64,
    channel: FaultidChannel,
    out: *mut f64,
) -> FaultidStatus {
    guarded(|| {
        if model.is_null() || out.is_null() {
            return fail(FaultidStatus::NullArgument, "null argument");
        }
        let inner = &(*model).inner;
        let fault = match single_fault(inner, segment, severity) {
            Ok(f) => f,
            Err(status) => return status,
        };
        match inner.admittance_change(omega, &fault, channel.into()) {
            Ok(v) => {
                *out = v;
                FaultidStatus::Ok
            }
            Err(e @ faultid::model::ModelError::SingularDynamicStiffness { .. }) => {
                fail(FaultidStatus::Singular, &e.to_string())
            }
            Err(e) => fail(FaultidStatus::InvalidArgument, &e.to_string()),
        }
    })
}

/// Undamped natural frequencies (rad/s), ascending. Writes up to `capacity`
/// values into `out` and stores the full count in `out_len`; call with a null
/// `out` (capacity 0) to query the count.
///
/// # Safety
/// `model` must be a live handle; `out` must have room for `capacity` values
/// when non-null; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn faultid_model_natural_frequencies(
    model: *const FaultidModel,
    out: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> FaultidStatus {
    guarded(|| {
        if model.is_null() || out_len.is_null() {
            return fail(FaultidStatus::NullArgument, "null argument");
        }
        match (*model).inner.natural_frequencies(None) {
            Ok(freqs) => {
                *out_len = freqs.len();
                if !out.is_null() {
                    for (i, f) in freqs.iter().take(capacity).enumerate() {
                        *out.add(i) = *f;
                    }
                }
                FaultidStatus::Ok
            }
            Err(e) => fail(FaultidStatus::InvalidArgument, &e.to_string()),
        }
    })
}

/// Deserialize a fitted surface from its JSON form (a pipeline
/// `surfaces/surface_###.json` document).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn faultid_surface_from_json(
    json: *const c_char,
    out: *mut *mut FaultidSurface,
) -> FaultidStatus {
    guarded(|| {
        if out.is_null() {
            return fail(FaultidStatus::NullArgument, "out pointer is null");
        }
        let text = match utf8_arg(json) {
            Ok(t) => t,
            Err(status) => return fail(status, "json argument invalid"),
        };
        let record: SurfaceRecord = match serde_json::from_str(text) {
            Ok(r) => r,
            Err(e) => return fail(FaultidStatus::Parse, &e.to_string()),
        };
        match GpSurface::try_from(record) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(FaultidSurface { inner }));
                FaultidStatus::Ok
            }
            Err(e) => fail(FaultidStatus::InvalidArgument, &e.to_string()),
        }
    })
}

/// Destroy a surface handle; a null pointer is a no-op.
///
/// # Safety
/// `surface` must have been created by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn faultid_surface_free(surface: *mut FaultidSurface) {
    if !surface.is_null() {
        drop(Box::from_raw(surface));
    }
}

/// Frequency index the surface calibrates, or 0 for a null handle.
///
/// # Safety
/// `surface` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn faultid_surface_frequency_index(surface: *const FaultidSurface) -> usize {
    if surface.is_null() {
        return 0;
    }
    (*surface).inner.frequency_index()
}

/// Predictive mean and variance at (location, severity).
///
/// # Safety
/// `surface` must be a live handle; `out_mean`/`out_variance` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn faultid_surface_predict(
    surface: *const FaultidSurface,
    location: f64,
    severity: f64,
    out_mean: *mut f64,
    out_variance: *mut f64,
) -> FaultidStatus {
    guarded(|| {
        if surface.is_null() || out_mean.is_null() || out_variance.is_null() {
            return fail(FaultidStatus::NullArgument, "null argument");
        }
        if !location.is_finite() || !severity.is_finite() {
            return fail(FaultidStatus::InvalidArgument, "query must be finite");
        }
        let (mean, variance) = (*surface).inner.predict([location, severity]);
        *out_mean = mean;
        *out_variance = variance;
        FaultidStatus::Ok
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    fn new_model() -> *mut FaultidModel {
        let mut handle: *mut FaultidModel = ptr::null_mut();
        let status = unsafe {
            faultid_model_new_uniform(4, 1.0, 1.0e4, 1e-3, 1e-6, 2, 50.0, 100.0, &mut handle)
        };
        assert_eq!(status, FaultidStatus::Ok);
        assert!(!handle.is_null());
        handle
    }

    #[test]
    fn model_round_trip_through_the_c_surface() {
        let model = new_model();
        unsafe {
            assert_eq!(faultid_model_segments(model), 4);

            let mut len = 0usize;
            assert_eq!(
                faultid_model_natural_frequencies(model, ptr::null_mut(), 0, &mut len),
                FaultidStatus::Ok
            );
            assert_eq!(len, 4);
            let mut freqs = vec![0.0; len];
            assert_eq!(
                faultid_model_natural_frequencies(model, freqs.as_mut_ptr(), len, &mut len),
                FaultidStatus::Ok
            );
            assert!(freqs.windows(2).all(|w| w[0] < w[1]));

            let omega = freqs[1] * 0.9;
            let (mut re, mut im) = (0.0, 0.0);
            assert_eq!(
                faultid_model_admittance(model, omega, 0, 0.0, &mut re, &mut im),
                FaultidStatus::Ok
            );
            assert!(re.is_finite() && im.is_finite());

            let mut change = -1.0;
            assert_eq!(
                faultid_model_admittance_change(
                    model,
                    omega,
                    2,
                    0.05,
                    FaultidChannel::Magnitude,
                    &mut change
                ),
                FaultidStatus::Ok
            );
            assert!(change > 0.0);

            let mut zero = -1.0;
            assert_eq!(
                faultid_model_admittance_change(
                    model,
                    omega,
                    1,
                    0.0,
                    FaultidChannel::Magnitude,
                    &mut zero
                ),
                FaultidStatus::Ok
            );
            assert_eq!(zero, 0.0);

            faultid_model_free(model);
        }
    }

    #[test]
    fn invalid_arguments_set_the_error_message() {
        unsafe {
            let mut handle: *mut FaultidModel = ptr::null_mut();
            let status = faultid_model_new_uniform(0, 1.0, 1.0, 0.0, 0.0, 1, 1.0, 1.0, &mut handle);
            assert_eq!(status, FaultidStatus::InvalidArgument);
            let message = CStr::from_ptr(faultid_last_error_message());
            assert!(!message.to_bytes().is_empty());

            let model = new_model();
            let mut out = 0.0;
            // Fault location outside the chain.
            let status = faultid_model_admittance_change(
                model,
                10.0,
                9,
                0.05,
                FaultidChannel::Magnitude,
                &mut out,
            );
            assert_eq!(status, FaultidStatus::InvalidArgument);
            faultid_model_free(model);

            assert_eq!(
                faultid_model_admittance_change(
                    ptr::null(),
                    10.0,
                    1,
                    0.0,
                    FaultidChannel::Real,
                    &mut out
                ),
                FaultidStatus::NullArgument
            );
        }
    }

    #[test]
    fn model_json_round_trips_across_the_boundary() {
        let model = StructuralModel::uniform(3, 1.0, 2.0e3, 1e-3, 1e-6, 1, 10.0, 50.0).unwrap();
        let json = CString::new(serde_json::to_string(&model).unwrap()).unwrap();
        unsafe {
            let mut handle: *mut FaultidModel = ptr::null_mut();
            assert_eq!(
                faultid_model_from_json(json.as_ptr(), &mut handle),
                FaultidStatus::Ok
            );
            assert_eq!(faultid_model_segments(handle), 3);
            faultid_model_free(handle);

            let bad = CString::new("{not json").unwrap();
            let mut handle: *mut FaultidModel = ptr::null_mut();
            assert_eq!(
                faultid_model_from_json(bad.as_ptr(), &mut handle),
                FaultidStatus::Parse
            );
        }
    }

    #[test]
    fn surface_predicts_identically_to_the_rust_api() {
        use faultid::gp::{KernelKind, McmcConfig, TrainingSet};
        let inputs: Vec<[f64; 2]> = (0..12)
            .map(|i| [1.0 + (i % 4) as f64, 0.01 * (i / 4) as f64])
            .collect();
        let outputs: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin()).collect();
        let set = TrainingSet::new(inputs, outputs, 3).unwrap();
        let surface = GpSurface::fit(
            set,
            KernelKind::ProductSe,
            &McmcConfig {
                n_samples: 80,
                step_size: 0.3,
                seed: 2,
            },
        )
        .unwrap();
        let json =
            CString::new(serde_json::to_string(&SurfaceRecord::from(&surface)).unwrap()).unwrap();
        unsafe {
            let mut handle: *mut FaultidSurface = ptr::null_mut();
            assert_eq!(
                faultid_surface_from_json(json.as_ptr(), &mut handle),
                FaultidStatus::Ok
            );
            assert_eq!(faultid_surface_frequency_index(handle), 3);
            for q in [[1.0, 0.0], [2.5, 0.015], [4.0, 0.02]] {
                let (mut mean, mut var) = (0.0, 0.0);
                assert_eq!(
                    faultid_surface_predict(handle, q[0], q[1], &mut mean, &mut var),
                    FaultidStatus::Ok
                );
                let (want_mean, want_var) = surface.predict(q);
                assert_eq!(mean, want_mean);
                assert_eq!(var, want_var);
            }
            let mut mean = 0.0;
            let mut var = 0.0;
            assert_eq!(
                faultid_surface_predict(handle, f64::NAN, 0.0, &mut mean, &mut var),
                FaultidStatus::InvalidArgument
            );
            faultid_surface_free(handle);
        }
    }

    #[test]
    fn version_is_a_nul_terminated_string() {
        unsafe {
            let v = CStr::from_ptr(faultid_version());
            assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
        }
    }
}
