//! C ABI over the `shsade` crate.
//!
//! Every fallible function returns a [`ShsadeStatus`]; on failure the message
//! is available from [`shsade_last_error`] on the same thread. Handles are
//! opaque and must be released with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use shsade::codec::{decode_indices, encode_indices, DiscreteSpace};
use shsade::de_core::{Bounds, Objective};
use shsade::nas::{nas_evolve, BiObjectiveConfig, NasConfig};
use shsade::objectives::{BenchmarkFunction, BenchmarkKind, TabularSurrogate};
use shsade::shsade::{run, RunResult, ShsadeConfig, Termination};
use shsade::{seeded_rng, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShsadeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    Evaluation = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Outcome of a continuous optimization run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ShsadeRunSummary {
    pub best_fitness: f64,
    pub evaluations: u64,
    pub generations: u64,
}

/// Objective callback: write `f(x)` to `*out` and return 0, or return
/// non-zero to abort the run with [`ShsadeStatus::Evaluation`].
pub type ShsadeObjectiveFn = Option<
    unsafe extern "C" fn(x: *const f64, dim: usize, user_data: *mut c_void, out: *mut f64) -> c_int,
>;

/// Optimizer configuration.
pub struct ShsadeConfigHandle {
    inner: ShsadeConfig,
}

/// Discrete search space.
pub struct ShsadeSpaceHandle {
    inner: DiscreteSpace,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: ShsadeStatus, msg: impl Into<String>) -> ShsadeStatus {
    set_error(msg);
    status
}

fn status_of(err: &Error) -> ShsadeStatus {
    match err {
        Error::Evaluation(_) | Error::NonFiniteFitness(_) | Error::Predictor(_) => {
            ShsadeStatus::Evaluation
        }
        Error::InvalidConfig(_)
        | Error::PopulationTooSmall(_)
        | Error::InvalidBounds(_)
        | Error::InvalidSpace(_) => ShsadeStatus::InvalidConfig,
        _ => ShsadeStatus::InvalidArgument,
    }
}

fn from_error(err: Error) -> ShsadeStatus {
    fail(status_of(&err), err.to_string())
}

/// Runs `body`, turning a panic into [`ShsadeStatus::Panic`].
fn guard(body: impl FnOnce() -> ShsadeStatus) -> ShsadeStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => {
            if status == ShsadeStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            status
        }
        Err(_) => fail(ShsadeStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, ShsadeStatus> {
    if s.is_null() {
        return Err(fail(ShsadeStatus::NullPointer, "string argument is null"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(ShsadeStatus::InvalidArgument, "string is not valid UTF-8"))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn shsade_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// New configuration with default settings.
#[no_mangle]
pub extern "C" fn shsade_config_new() -> *mut ShsadeConfigHandle {
    Box::into_raw(Box::new(ShsadeConfigHandle {
        inner: ShsadeConfig::default(),
    }))
}

/// Parses a configuration from JSON; omitted fields keep their defaults.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn shsade_config_from_json(
    json: *const c_char,
    out: *mut *mut ShsadeConfigHandle,
) -> ShsadeStatus {
    guard(|| {
        if out.is_null() {
            return fail(ShsadeStatus::NullPointer, "out is null");
        }
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let inner: ShsadeConfig = match serde_json::from_str(text) {
            Ok(c) => c,
            Err(e) => return fail(ShsadeStatus::InvalidConfig, e.to_string()),
        };
        if let Err(e) = inner.validate() {
            return from_error(e);
        }
        *out = Box::into_raw(Box::new(ShsadeConfigHandle { inner }));
        ShsadeStatus::Ok
    })
}

/// Applies `edit` to a copy of the configuration and keeps it only if it validates.
unsafe fn edit_config(
    config: *mut ShsadeConfigHandle,
    edit: impl FnOnce(&mut ShsadeConfig),
) -> ShsadeStatus {
    guard(|| {
        let Some(c) = config.as_mut() else {
            return fail(ShsadeStatus::NullPointer, "config is null");
        };
        let mut next = c.inner.clone();
        edit(&mut next);
        match next.validate() {
            Ok(()) => {
                c.inner = next;
                ShsadeStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `config` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shsade_config_set_population_size(
    config: *mut ShsadeConfigHandle,
    value: usize,
) -> ShsadeStatus {
    edit_config(config, |c| c.population_size = value)
}

/// # Safety
/// `config` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shsade_config_set_memory_size(
    config: *mut ShsadeConfigHandle,
    value: usize,
) -> ShsadeStatus {
    edit_config(config, |c| c.memory_size = value)
}

/// # Safety
/// `config` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shsade_config_set_max_generations(
    config: *mut ShsadeConfigHandle,
    value: usize,
) -> ShsadeStatus {
    edit_config(config, |c| c.max_generations = value)
}

/// # Safety
/// `config` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shsade_config_set_pbest_fraction(
    config: *mut ShsadeConfigHandle,
    value: f64,
) -> ShsadeStatus {
    edit_config(config, |c| c.pbest_fraction = value)
}

/// # Safety
/// `config` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shsade_config_set_learning_rate(
    config: *mut ShsadeConfigHandle,
    value: f64,
) -> ShsadeStatus {
    edit_config(config, |c| c.learning_rate = value)
}

/// # Safety
/// `config` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shsade_config_set_sinusoidal(
    config: *mut ShsadeConfigHandle,
    value: bool,
) -> ShsadeStatus {
    edit_config(config, |c| c.sinusoidal = value)
}

/// # Safety
/// `config` must come from this library (or be null) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn shsade_config_free(config: *mut ShsadeConfigHandle) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

fn termination(max_evaluations: u64) -> Termination {
    Termination {
        max_evaluations: (max_evaluations > 0).then_some(max_evaluations),
        ..Default::default()
    }
}

unsafe fn write_result(
    result: RunResult,
    best_x: *mut f64,
    best_x_len: usize,
    summary: *mut ShsadeRunSummary,
) -> ShsadeStatus {
    if !best_x.is_null() {
        if best_x_len < result.best.x.len() {
            return fail(
                ShsadeStatus::BufferTooSmall,
                format!(
                    "best_x needs {} entries, got {best_x_len}",
                    result.best.x.len()
                ),
            );
        }
        ptr::copy_nonoverlapping(result.best.x.as_ptr(), best_x, result.best.x.len());
    }
    if let Some(s) = summary.as_mut() {
        *s = ShsadeRunSummary {
            best_fitness: result.best.fitness,
            evaluations: result.evaluations,
            generations: result.generations as u64,
        };
    }
    ShsadeStatus::Ok
}

/// Minimizes a built-in benchmark (`"sphere"`, `"rosenbrock"`,
/// `"rastrigin"`, `"ackley"`). `max_evaluations = 0` means no evaluation
/// limit. `best_x` (may be null) receives the best point.
///
/// # Safety
/// Pointers must be valid; `best_x` must hold `best_x_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn shsade_run_benchmark(
    config: *const ShsadeConfigHandle,
    name: *const c_char,
    dimension: usize,
    max_evaluations: u64,
    seed: u64,
    best_x: *mut f64,
    best_x_len: usize,
    summary: *mut ShsadeRunSummary,
) -> ShsadeStatus {
    guard(|| {
        let Some(cfg) = config.as_ref() else {
            return fail(ShsadeStatus::NullPointer, "config is null");
        };
        let kind: BenchmarkKind = match read_str(name) {
            Ok(n) => match n.parse() {
                Ok(k) => k,
                Err(e) => return from_error(e),
            },
            Err(s) => return s,
        };
        let mut f = match BenchmarkFunction::new(kind, dimension) {
            Ok(f) => f,
            Err(e) => return from_error(e),
        };
        match run(
            &cfg.inner,
            &mut f,
            termination(max_evaluations),
            &mut seeded_rng(seed),
        ) {
            Ok(r) => write_result(r, best_x, best_x_len, summary),
            Err(e) => from_error(e),
        }
    })
}

struct CallbackObjective {
    bounds: Bounds,
    f: unsafe extern "C" fn(*const f64, usize, *mut c_void, *mut f64) -> c_int,
    user_data: *mut c_void,
}

impl Objective for CallbackObjective {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&mut self, x: &[f64]) -> shsade::Result<f64> {
        let mut out = f64::NAN;
        // SAFETY: the caller of `shsade_minimize` vouches for the callback.
        let code = unsafe { (self.f)(x.as_ptr(), x.len(), self.user_data, &mut out) };
        if code != 0 {
            return Err(Error::Evaluation(format!(
                "objective callback returned {code}"
            )));
        }
        Ok(out)
    }
}

/// Minimizes a caller-supplied objective over the box `[lower, upper]`.
///
/// # Safety
/// `lower` and `upper` must hold `dimension` doubles; `objective` must be
/// safe to call with `user_data` from the calling thread.
#[no_mangle]
pub unsafe extern "C" fn shsade_minimize(
    config: *const ShsadeConfigHandle,
    lower: *const f64,
    upper: *const f64,
    dimension: usize,
    objective: ShsadeObjectiveFn,
    user_data: *mut c_void,
    max_evaluations: u64,
    seed: u64,
    best_x: *mut f64,
    best_x_len: usize,
    summary: *mut ShsadeRunSummary,
) -> ShsadeStatus {
    guard(|| {
        let Some(cfg) = config.as_ref() else {
            return fail(ShsadeStatus::NullPointer, "config is null");
        };
        let Some(f) = objective else {
            return fail(ShsadeStatus::NullPointer, "objective is null");
        };
        if lower.is_null() || upper.is_null() {
            return fail(ShsadeStatus::NullPointer, "bounds are null");
        }
        let lo = std::slice::from_raw_parts(lower, dimension).to_vec();
        let hi = std::slice::from_raw_parts(upper, dimension).to_vec();
        let bounds = match Bounds::new(lo, hi) {
            Ok(b) => b,
            Err(e) => return from_error(e),
        };
        let mut obj = CallbackObjective {
            bounds,
            f,
            user_data,
        };
        match run(
            &cfg.inner,
            &mut obj,
            termination(max_evaluations),
            &mut seeded_rng(seed),
        ) {
            Ok(r) => write_result(r, best_x, best_x_len, summary),
            Err(e) => from_error(e),
        }
    })
}

/// Parses a search space from `{"axes": [{"name": ..., "values": [...]}, ...]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn shsade_space_from_json(
    json: *const c_char,
    out: *mut *mut ShsadeSpaceHandle,
) -> ShsadeStatus {
    guard(|| {
        if out.is_null() {
            return fail(ShsadeStatus::NullPointer, "out is null");
        }
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match DiscreteSpace::from_json(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(ShsadeSpaceHandle { inner }));
                ShsadeStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of axes, or 0 for a null handle.
///
/// # Safety
/// `space` must come from this library (or be null).
#[no_mangle]
pub unsafe extern "C" fn shsade_space_dim(space: *const ShsadeSpaceHandle) -> usize {
    space.as_ref().map_or(0, |s| s.inner.dim())
}

/// Writes the `[0, 1]` encoding of the value indices to `out`.
///
/// # Safety
/// `indices` and `out` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn shsade_space_encode(
    space: *const ShsadeSpaceHandle,
    indices: *const usize,
    len: usize,
    out: *mut f64,
) -> ShsadeStatus {
    guard(|| {
        let Some(s) = space.as_ref() else {
            return fail(ShsadeStatus::NullPointer, "space is null");
        };
        if indices.is_null() || out.is_null() {
            return fail(ShsadeStatus::NullPointer, "buffer is null");
        }
        if len != s.inner.dim() {
            return fail(
                ShsadeStatus::InvalidArgument,
                format!("expected {} indices, got {len}", s.inner.dim()),
            );
        }
        let idx = std::slice::from_raw_parts(indices, len);
        if let Some((a, &j)) = idx
            .iter()
            .enumerate()
            .find(|(a, &j)| j >= s.inner.axes()[*a].len())
        {
            return fail(
                ShsadeStatus::InvalidArgument,
                format!(
                    "index {j} out of range for axis `{}`",
                    s.inner.axes()[a].name
                ),
            );
        }
        let u = encode_indices(idx, &s.inner);
        ptr::copy_nonoverlapping(u.as_ptr(), out, len);
        ShsadeStatus::Ok
    })
}

/// Decodes a continuous vector (clamped to `[0, 1]`) to value indices.
///
/// # Safety
/// `u` and `out` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn shsade_space_decode(
    space: *const ShsadeSpaceHandle,
    u: *const f64,
    len: usize,
    out: *mut usize,
) -> ShsadeStatus {
    guard(|| {
        let Some(s) = space.as_ref() else {
            return fail(ShsadeStatus::NullPointer, "space is null");
        };
        if u.is_null() || out.is_null() {
            return fail(ShsadeStatus::NullPointer, "buffer is null");
        }
        if len != s.inner.dim() {
            return fail(
                ShsadeStatus::InvalidArgument,
                format!("expected {} coordinates, got {len}", s.inner.dim()),
            );
        }
        let idx = decode_indices(std::slice::from_raw_parts(u, len), &s.inner);
        ptr::copy_nonoverlapping(idx.as_ptr(), out, len);
        ShsadeStatus::Ok
    })
}

/// # Safety
/// `space` must come from this library (or be null) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn shsade_space_free(space: *mut ShsadeSpaceHandle) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Architecture search on the seeded tabular surrogate of `space`, with the
/// default search settings. `*out_json` receives the result document; free
/// it with [`shsade_string_free`].
///
/// # Safety
/// `space` must be a live handle and `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn shsade_nas_run(
    space: *const ShsadeSpaceHandle,
    surrogate_seed: u64,
    cost_budget: f64,
    omega: f64,
    budget: usize,
    seed: u64,
    out_json: *mut *mut c_char,
) -> ShsadeStatus {
    guard(|| {
        let Some(s) = space.as_ref() else {
            return fail(ShsadeStatus::NullPointer, "space is null");
        };
        if out_json.is_null() {
            return fail(ShsadeStatus::NullPointer, "out_json is null");
        }
        let bi = match BiObjectiveConfig::new(cost_budget, omega) {
            Ok(b) => b,
            Err(e) => return from_error(e),
        };
        let mut cfg = NasConfig::new(bi);
        cfg.budget = budget;
        let surrogate = TabularSurrogate::new(s.inner.clone(), surrogate_seed);
        match nas_evolve(&s.inner, &surrogate, &cfg, &mut seeded_rng(seed)) {
            Ok(r) => match CString::new(r.to_json(&s.inner).to_string()) {
                Ok(c) => {
                    *out_json = c.into_raw();
                    ShsadeStatus::Ok
                }
                Err(_) => fail(ShsadeStatus::Panic, "result contains a NUL byte"),
            },
            Err(e) => from_error(e),
        }
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library (or be null) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn shsade_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
