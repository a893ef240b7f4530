//! C ABI over `hawkes-risk`.
//!
//! Objects cross the boundary as opaque handles created by `hr_*_new` style
//! constructors and released by the matching `hr_*_free`. Every fallible
//! function returns an [`HrStatus`]; on failure a message is kept per thread
//! and can be read with [`hr_last_error`]. Strings returned by the library
//! are NUL-terminated UTF-8 and must be released with [`hr_string_free`].
//!
//! # Safety
//!
//! Every pointer argument must be null or valid for the access its type
//! implies: handles must come from this library and not be freed yet,
//! input strings must be NUL-terminated and buffers must hold the stated
//! number of elements. Null pointers are reported as
//! [`HrStatus::NullPointer`]. Handles are not synchronized, so one handle
//! must not be mutated while another thread uses it.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hawkes_risk::bounds::{bound_set, BoundInputs};
use hawkes_risk::harness::{run_convergence, run_single, verify_bounds, Built, ExperimentConfig};
use hawkes_risk::metrics::{skorokhod_distance, sobolev_distance, uniform_distance};
use hawkes_risk::simulate::{Field, StepPath};
use hawkes_risk::Error;

/// Status code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Parameter = 4,
    Unstable = 5,
    Runaway = 6,
    /// Diverging kernel, infinite variation, missing moment or log-domain fit.
    Numeric = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Experiment built from a JSON config.
pub struct HrExperiment {
    cfg: ExperimentConfig,
    built: Built,
}

/// Right-continuous step path on `[0, T]`.
pub struct HrPath {
    path: StepPath,
}

/// Distances between the continuous risk path and its discrete scheme on
/// one trial. `skorokhod` is NaN when either path has too many jumps for
/// the exact computation.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HrCoupleMetrics {
    pub delta: f64,
    pub count: u64,
    pub count_delta: u64,
    pub risk: f64,
    pub risk_delta: f64,
    pub uniform: f64,
    pub sobolev: f64,
    pub skorokhod: f64,
    pub skorokhod_upper: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let mut bytes = msg.into().into_bytes();
    bytes.retain(|&b| b != 0);
    let c = CString::new(bytes).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> HrStatus {
    match e {
        Error::Config(_) | Error::Json(_) => HrStatus::Config,
        Error::Parameter(_) => HrStatus::Parameter,
        Error::Unstable { .. } => HrStatus::Unstable,
        Error::RunawayIntensity(_) => HrStatus::Runaway,
        Error::DivergingKernel(_)
        | Error::InfiniteVariation(_)
        | Error::UnsupportedMoment(_)
        | Error::LogDomain(_) => HrStatus::Numeric,
        Error::Io(_) | Error::Csv(_) => HrStatus::Io,
    }
}

struct Fail(HrStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(HrStatus::NullPointer, format!("{what} is null"))
}

/// Run `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HrStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HrStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(HrStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

fn c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|e| Fail(HrStatus::Io, e.to_string()))
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap` bytes). Returns the full message length without the
/// terminator. `buf` may be null to query the length.
#[no_mangle]
pub unsafe extern "C" fn hr_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by the library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse and validate a JSON experiment config.
#[no_mangle]
pub unsafe extern "C" fn hr_experiment_new(
    json: *const c_char,
    out: *mut *mut HrExperiment,
) -> HrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let cfg = ExperimentConfig::from_json(str_arg(json, "json")?)?;
        let built = cfg.build()?;
        *out = Box::into_raw(Box::new(HrExperiment { cfg, built }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn hr_experiment_free(exp: *mut HrExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Replace the master seed.
#[no_mangle]
pub unsafe extern "C" fn hr_experiment_set_seed(exp: *mut HrExperiment, seed: u64) -> HrStatus {
    guard(|| {
        out_arg(exp, "experiment")?.cfg.seed = seed;
        Ok(())
    })
}

/// Continuous risk path `R` of trial `trial`.
#[no_mangle]
pub unsafe extern "C" fn hr_simulate_risk(
    exp: *const HrExperiment,
    trial: u64,
    out: *mut *mut HrPath,
) -> HrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let exp = ref_arg(exp, "experiment")?;
        let run = run_single(&exp.cfg, &exp.built, &[], trial)?;
        let path = run.continuous.step(Field::Risk)?;
        *out = Box::into_raw(Box::new(HrPath { path }));
        Ok(())
    })
}

/// Discrete risk path `R^Delta` of trial `trial`, driven by the same atoms
/// as [`hr_simulate_risk`].
#[no_mangle]
pub unsafe extern "C" fn hr_simulate_discrete_risk(
    exp: *const HrExperiment,
    trial: u64,
    delta: f64,
    out: *mut *mut HrPath,
) -> HrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let exp = ref_arg(exp, "experiment")?;
        let run = run_single(&exp.cfg, &exp.built, &[delta], trial)?;
        let path = run.discrete[0].step(Field::Risk)?;
        *out = Box::into_raw(Box::new(HrPath { path }));
        Ok(())
    })
}

/// Pathwise distances between `R` and `R^Delta` on trial `trial`.
#[no_mangle]
pub unsafe extern "C" fn hr_couple(
    exp: *const HrExperiment,
    trial: u64,
    delta: f64,
    out: *mut HrCoupleMetrics,
) -> HrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let exp = ref_arg(exp, "experiment")?;
        let run = run_single(&exp.cfg, &exp.built, &[delta], trial)?;
        let r = &run.rows[0];
        *out = HrCoupleMetrics {
            delta: r.delta,
            count: r.count as u64,
            count_delta: r.count_delta,
            risk: r.risk,
            risk_delta: r.risk_delta,
            uniform: r.uniform,
            sobolev: r.sobolev,
            skorokhod: r.skorokhod.unwrap_or(f64::NAN),
            skorokhod_upper: r.skorokhod_upper,
        };
        Ok(())
    })
}

/// Bound constants at step `delta` as a JSON object.
#[no_mangle]
pub unsafe extern "C" fn hr_bounds_json(
    exp: *const HrExperiment,
    delta: f64,
    out: *mut *mut c_char,
) -> HrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let exp = ref_arg(exp, "experiment")?;
        let b = &exp.built;
        let set = bound_set(&BoundInputs {
            kernel: &b.kernel,
            psi: &b.psi,
            marks: &b.marks,
            step: delta,
            horizon: b.horizon,
            eta: exp.cfg.eta,
            p: exp.cfg.p,
            allow_unstable: exp.cfg.allow_unstable,
        })?;
        *out = c_string(serde_json::to_string(&set).map_err(Error::from)?)?;
        Ok(())
    })
}

/// Full convergence study as JSON. `workers == 0` uses every core.
#[no_mangle]
pub unsafe extern "C" fn hr_convergence_json(
    exp: *const HrExperiment,
    workers: usize,
    out: *mut *mut c_char,
) -> HrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let exp = ref_arg(exp, "experiment")?;
        let rep = run_convergence(&exp.cfg, workers)?;
        *out = c_string(serde_json::to_string(&rep).map_err(Error::from)?)?;
        Ok(())
    })
}

/// Bound-verification suite as JSON.
#[no_mangle]
pub unsafe extern "C" fn hr_verify_json(
    exp: *const HrExperiment,
    workers: usize,
    out: *mut *mut c_char,
) -> HrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let exp = ref_arg(exp, "experiment")?;
        let rep = verify_bounds(&exp.cfg, workers)?;
        *out = c_string(serde_json::to_string(&rep).map_err(Error::from)?)?;
        Ok(())
    })
}

/// Step path with value `values[i]` on `[breaks[i], breaks[i+1])`.
/// `breaks[0]` must be 0 and the breaks strictly increasing within `[0, horizon]`.
#[no_mangle]
pub unsafe extern "C" fn hr_path_new(
    breaks: *const f64,
    values: *const f64,
    len: usize,
    horizon: f64,
    out: *mut *mut HrPath,
) -> HrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        if len > 0 && (breaks.is_null() || values.is_null()) {
            return Err(null("breaks/values"));
        }
        let (b, v) = if len == 0 {
            (Vec::new(), Vec::new())
        } else {
            (
                std::slice::from_raw_parts(breaks, len).to_vec(),
                std::slice::from_raw_parts(values, len).to_vec(),
            )
        };
        let path = StepPath::new(b, v, horizon)?;
        *out = Box::into_raw(Box::new(HrPath { path }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn hr_path_free(path: *mut HrPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// Number of constant pieces; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn hr_path_len(path: *const HrPath) -> usize {
    path.as_ref().map_or(0, |p| p.path.values().len())
}

/// Horizon `T`; NaN for a null handle.
#[no_mangle]
pub unsafe extern "C" fn hr_path_horizon(path: *const HrPath) -> f64 {
    path.as_ref().map_or(f64::NAN, |p| p.path.horizon())
}

/// Value at time `t`; NaN for a null handle.
#[no_mangle]
pub unsafe extern "C" fn hr_path_value_at(path: *const HrPath, t: f64) -> f64 {
    path.as_ref().map_or(f64::NAN, |p| p.path.value_at(t))
}

/// Copy breaks and values into caller buffers of `cap` entries each.
#[no_mangle]
pub unsafe extern "C" fn hr_path_copy(
    path: *const HrPath,
    breaks: *mut f64,
    values: *mut f64,
    cap: usize,
) -> HrStatus {
    guard(|| {
        let p = &ref_arg(path, "path")?.path;
        let n = p.values().len();
        if cap < n {
            return Err(Fail(
                HrStatus::BufferTooSmall,
                format!("need {n} entries, buffer holds {cap}"),
            ));
        }
        if breaks.is_null() || values.is_null() {
            return Err(null("breaks/values"));
        }
        ptr::copy_nonoverlapping(p.breaks().as_ptr(), breaks, n);
        ptr::copy_nonoverlapping(p.values().as_ptr(), values, n);
        Ok(())
    })
}

unsafe fn distance(
    f: *const HrPath,
    g: *const HrPath,
    out: *mut f64,
    d: impl FnOnce(&StepPath, &StepPath) -> hawkes_risk::Result<f64>,
) -> HrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let (f, g) = (ref_arg(f, "f")?, ref_arg(g, "g")?);
        *out = d(&f.path, &g.path)?;
        Ok(())
    })
}

/// Sup-norm distance.
#[no_mangle]
pub unsafe extern "C" fn hr_uniform_distance(
    f: *const HrPath,
    g: *const HrPath,
    out: *mut f64,
) -> HrStatus {
    distance(f, g, out, uniform_distance)
}

/// Fractional Sobolev `W^{eta,1}` distance, `0 < eta < 1`.
#[no_mangle]
pub unsafe extern "C" fn hr_sobolev_distance(
    f: *const HrPath,
    g: *const HrPath,
    eta: f64,
    out: *mut f64,
) -> HrStatus {
    distance(f, g, out, |a, b| sobolev_distance(a, b, eta))
}

/// Exact Skorokhod J1 distance.
#[no_mangle]
pub unsafe extern "C" fn hr_skorokhod_distance(
    f: *const HrPath,
    g: *const HrPath,
    out: *mut f64,
) -> HrStatus {
    distance(f, g, out, skorokhod_distance)
}
