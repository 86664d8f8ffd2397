//! C interface to `prisk`.
//!
//! Objects cross the boundary as opaque handles created by `*_load` /
//! `*_generate` functions and released with the matching `*_free`. Every
//! fallible call returns a [`PriskStatus`]; on failure
//! [`prisk_last_error_message`] describes the error for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use prisk::network::{load_checkpoint, Model, WindowSample, ENV_WIDTH};
use prisk::riskfield::{extract_features, PodarConfig};
use prisk::scenario::{generate_synthetic, load_scenario, Level, ScenarioLog, Template};
use prisk::{Error, NUM_LEVELS};

/// Result codes of every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriskStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    Config = 6,
    Data = 7,
    Shape = 8,
    Format = 9,
    Range = 10,
    BufferTooSmall = 11,
    Panic = 99,
}

/// A loaded or generated scenario log.
pub struct PriskScenario(ScenarioLog);

/// A trained risk model.
pub struct PriskModel(Model);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> PriskStatus {
    match e {
        Error::Io { .. } => PriskStatus::Io,
        Error::Parse { .. } => PriskStatus::Parse,
        Error::Validation(_) | Error::Degenerate { .. } | Error::Mismatch(_) => PriskStatus::Validation,
        Error::Config(_) => PriskStatus::Config,
        Error::Data(_) | Error::Divergence { .. } => PriskStatus::Data,
        Error::Shape(_) => PriskStatus::Shape,
        Error::Format(_) => PriskStatus::Format,
        Error::Range(_) => PriskStatus::Range,
    }
}

fn fail(status: PriskStatus, msg: impl Into<String>) -> PriskStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> PriskStatus) -> PriskStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == PriskStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(PriskStatus::Panic, "internal panic"),
    }
}

fn from_result<T>(r: prisk::Result<T>, out: impl FnOnce(T)) -> PriskStatus {
    match r {
        Ok(v) => {
            out(v);
            PriskStatus::Ok
        }
        Err(e) => fail(status_of(&e), e.to_string()),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, PriskStatus> {
    if p.is_null() {
        return Err(fail(PriskStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PriskStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn prisk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn prisk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Number of risk levels (5).
#[no_mangle]
pub extern "C" fn prisk_num_levels() -> usize {
    NUM_LEVELS
}

/// Number of risk features per frame (6).
#[no_mangle]
pub extern "C" fn prisk_feature_width() -> usize {
    ENV_WIDTH
}

/// Loads a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn prisk_scenario_load(path: *const c_char, out: *mut *mut PriskScenario) -> PriskStatus {
    guard(|| {
        if out.is_null() {
            return fail(PriskStatus::NullArgument, "out is null");
        }
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        from_result(load_scenario(path), |log| {
            *out = Box::into_raw(Box::new(PriskScenario(log)));
        })
    })
}

/// Generates a synthetic scenario from a template name with default parameters.
///
/// # Safety
/// `template` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn prisk_scenario_generate(
    template: *const c_char,
    seed: u64,
    out: *mut *mut PriskScenario,
) -> PriskStatus {
    guard(|| {
        if out.is_null() {
            return fail(PriskStatus::NullArgument, "out is null");
        }
        let name = match str_arg(template, "template") {
            Ok(p) => p,
            Err(s) => return s,
        };
        let result = name
            .parse::<Template>()
            .and_then(|t| generate_synthetic(t, &t.default_params(), seed));
        from_result(result, |log| {
            *out = Box::into_raw(Box::new(PriskScenario(log)));
        })
    })
}

/// Frame count of a scenario; 0 for a null handle.
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn prisk_scenario_frame_count(scenario: *const PriskScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.0.len())
}

/// Releases a scenario handle. Null is ignored.
///
/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn prisk_scenario_free(scenario: *mut PriskScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Writes the six risk features of every frame (row-major, frames × 6) with
/// the default PODAR configuration.
///
/// `rows_out` always receives the frame count. Pass a null `buffer` to query
/// it; a buffer shorter than `frames × 6` yields `BUFFER_TOO_SMALL`.
///
/// # Safety
/// `scenario` must be a live handle, `buffer` null or valid for `capacity`
/// writes, and `rows_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn prisk_scenario_features(
    scenario: *const PriskScenario,
    buffer: *mut f64,
    capacity: usize,
    rows_out: *mut usize,
) -> PriskStatus {
    guard(|| {
        let (Some(s), false) = (scenario.as_ref(), rows_out.is_null()) else {
            return fail(PriskStatus::NullArgument, "scenario or rows_out is null");
        };
        *rows_out = s.0.len();
        if buffer.is_null() {
            return PriskStatus::Ok;
        }
        let need = s.0.len() * ENV_WIDTH;
        if capacity < need {
            return fail(
                PriskStatus::BufferTooSmall,
                format!("buffer holds {capacity} values, {need} needed"),
            );
        }
        from_result(extract_features(&s.0, &PodarConfig::default()), |rows| {
            let dst = std::slice::from_raw_parts_mut(buffer, need);
            for (chunk, f) in dst.chunks_exact_mut(ENV_WIDTH).zip(rows) {
                chunk.copy_from_slice(&f.to_array());
            }
        })
    })
}

/// Loads a model checkpoint.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn prisk_model_load(path: *const c_char, out: *mut *mut PriskModel) -> PriskStatus {
    guard(|| {
        if out.is_null() {
            return fail(PriskStatus::NullArgument, "out is null");
        }
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        from_result(load_checkpoint(path), |m| {
            *out = Box::into_raw(Box::new(PriskModel(m)));
        })
    })
}

/// Window length in frames; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn prisk_model_window(model: *const PriskModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.config.window)
}

/// Ego values per frame (6 reduced or 9 raw); 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn prisk_model_ego_width(model: *const PriskModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.config.ego_width())
}

/// Predicts one window. `ego` holds `window × ego_width` values and `env`
/// `window × 6`, both row-major by frame. Writes 5 probabilities to `probs`
/// and the most probable level (ties to the lower level) to `level`.
///
/// # Safety
/// All pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn prisk_model_predict(
    model: *const PriskModel,
    ego: *const f64,
    env: *const f64,
    probs: *mut f64,
    level: *mut u8,
) -> PriskStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(PriskStatus::NullArgument, "model is null");
        };
        if ego.is_null() || env.is_null() || probs.is_null() || level.is_null() {
            return fail(PriskStatus::NullArgument, "ego, env, probs and level must be non-null");
        }
        let t = m.0.config.window;
        let w = m.0.config.ego_width();
        let ego = std::slice::from_raw_parts(ego, t * w);
        let env = std::slice::from_raw_parts(env, t * ENV_WIDTH);
        let sample = WindowSample {
            ego: ego.chunks_exact(w).map(<[f64]>::to_vec).collect(),
            env: env.chunks_exact(ENV_WIDTH).map(<[f64]>::to_vec).collect(),
            label: Level::saturating(0),
        };
        from_result(m.0.forward(&sample), |o| {
            std::slice::from_raw_parts_mut(probs, NUM_LEVELS).copy_from_slice(&o.probs);
            *level = o.level().get();
        })
    })
}

/// Releases a model handle. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn prisk_model_free(model: *mut PriskModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
