//! C ABI over the microlend engine: opaque handles, integer status codes,
//! and a thread-local last-error message.

use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use microlend::config::{load_scenario, ConfigFile, Profile};
use microlend::datagen::registry::pool_spec_by_name;
use microlend::datagen::{build_pool_named, ApplicantPool};
use microlend::domain::{BoxBounds, FeatureVector, PolicyParams, UtilityConfig};
use microlend::error::Error;
use microlend::harness::{persist_results, run_scenario};
use microlend::learner::{run_learning, LearnerConfig, MultiStartConfig, StepSchedule};
use microlend::policy::{evaluate_policy, LinkKind};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlStatus {
    Ok = 0,
    /// A null pointer or malformed argument.
    InvalidArgument = 1,
    /// Bad configuration (unknown pool spec, invalid parameter).
    Config = 2,
    /// I/O failure.
    Io = 3,
    /// A contract violation inside the engine.
    Contract = 4,
}

/// Link function selector for the C surface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlLink {
    /// `L(q) = 1 - exp(-q)`
    CaseA = 0,
    /// `L(q) = 2 exp(q) / (1 + exp(q)) - 1`
    CaseB = 1,
}

impl From<MlLink> for LinkKind {
    fn from(link: MlLink) -> LinkKind {
        match link {
            MlLink::CaseA => LinkKind::CaseA,
            MlLink::CaseB => LinkKind::CaseB,
        }
    }
}

/// Opaque applicant pool handle.
pub struct MlPool {
    inner: ApplicantPool,
}

thread_local! {
    static LAST_ERROR: std::cell::RefCell<Option<CString>> = const { std::cell::RefCell::new(None) };
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).ok();
    });
}

fn status_for(err: &Error) -> MlStatus {
    match err {
        Error::Config(_) | Error::Parse { .. } => MlStatus::Config,
        Error::Io { .. } => MlStatus::Io,
        Error::Contract(_) | Error::DataIntegrity(_) | Error::DegenerateFit(_) => {
            MlStatus::Contract
        }
    }
}

fn fail(err: &Error) -> MlStatus {
    set_error(&err.to_string());
    status_for(err)
}

fn invalid(message: &str) -> MlStatus {
    set_error(message);
    MlStatus::InvalidArgument
}

/// Message describing the calling thread's most recent error, or null when
/// none occurred. The pointer stays valid until the thread's next failing
/// call into this library.
#[no_mangle]
pub extern "C" fn ml_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |message| message.as_ptr())
    })
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ml_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

unsafe fn str_arg<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().ok()
}

/// Build an applicant pool from a registry spec name (`type1`..`type30`,
/// `group_basic`, `group_advanced_type1`..`18`, `csv:<path>`).
///
/// On success writes a pool handle to `out_pool` and returns `Ok`; the
/// handle must be released with [`ml_pool_free`].
///
/// # Safety
/// `spec_name` must be a valid NUL-terminated string and `out_pool` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn ml_pool_build(
    spec_name: *const c_char,
    size: usize,
    seed: u64,
    out_pool: *mut *mut MlPool,
) -> MlStatus {
    if out_pool.is_null() {
        return invalid("out_pool is null");
    }
    let Some(name) = (unsafe { str_arg(spec_name) }) else {
        return invalid("spec_name is null or not UTF-8");
    };
    let spec = match pool_spec_by_name(name) {
        Ok(spec) => spec,
        Err(e) => return fail(&e),
    };
    match build_pool_named(&spec, size, seed, name) {
        Ok(pool) => {
            unsafe { *out_pool = Box::into_raw(Box::new(MlPool { inner: pool })) };
            MlStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Release a pool handle. Null is a no-op.
///
/// # Safety
/// `pool` must be null or a pointer previously returned by
/// [`ml_pool_build`] that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn ml_pool_free(pool: *mut MlPool) {
    if !pool.is_null() {
        drop(unsafe { Box::from_raw(pool) });
    }
}

/// Number of samples in the pool; 0 for a null handle.
///
/// # Safety
/// `pool` must be null or a live pool handle.
#[no_mangle]
pub unsafe extern "C" fn ml_pool_len(pool: *const MlPool) -> usize {
    unsafe { pool.as_ref() }.map_or(0, |p| p.inner.len())
}

/// Feature dimension of the pool; 0 for a null handle or empty pool.
///
/// # Safety
/// `pool` must be null or a live pool handle.
#[no_mangle]
pub unsafe extern "C" fn ml_pool_feature_dim(pool: *const MlPool) -> usize {
    unsafe { pool.as_ref() }.map_or(0, |p| p.inner.feature_dim())
}

/// Evaluate the approval probability of one applicant.
///
/// `params` holds `2n` values (`phi` then `eps`); `features` holds `n`
/// values where NaN marks a missing entry. The probability is written to
/// `out_prob`.
///
/// # Safety
/// `params` must point to `2n` readable doubles, `features` to `n` readable
/// doubles, and `out_prob` to a writable double.
#[no_mangle]
pub unsafe extern "C" fn ml_policy_approval_prob(
    link: MlLink,
    params: *const f64,
    features: *const f64,
    n: usize,
    out_prob: *mut f64,
) -> MlStatus {
    if params.is_null() || features.is_null() || out_prob.is_null() || n == 0 {
        return invalid("null buffer or zero dimension");
    }
    let flat = unsafe { std::slice::from_raw_parts(params, 2 * n) };
    let raw = unsafe { std::slice::from_raw_parts(features, n) };
    let bound = flat.iter().fold(10.0f64, |acc, v| acc.max(*v));
    let bounds = match BoxBounds::new(0.0, bound.max(1.0)) {
        Ok(b) => b,
        Err(e) => return fail(&e),
    };
    let z = match PolicyParams::from_flat(flat, bounds) {
        Ok(z) => z,
        Err(e) => return fail(&e),
    };
    let entries: Vec<Option<f64>> = raw
        .iter()
        .map(|v| if v.is_nan() { None } else { Some(*v) })
        .collect();
    let fv = match FeatureVector::new(entries) {
        Ok(fv) => fv,
        Err(e) => return fail(&e),
    };
    let eval = evaluate_policy(&z, &fv, link.into());
    unsafe { *out_prob = eval.p };
    MlStatus::Ok
}

/// Run the learning loop on a pool and write the final `2n` parameters to
/// `out_params`.
///
/// A non-positive `constant_step` selects the default schedule. Multi-start
/// runs with its default settings when `multi_start` is nonzero, otherwise a
/// single candidate is used.
///
/// # Safety
/// `pool` must be a live pool handle and `out_params` must point to `2n`
/// writable doubles, where `n` is the pool's feature dimension.
#[no_mangle]
pub unsafe extern "C" fn ml_learn(
    pool: *const MlPool,
    link: MlLink,
    periods: u32,
    batch_size: usize,
    constant_step: f64,
    multi_start: i32,
    seed: u64,
    interest_rate: f64,
    subsidy: f64,
    out_params: *mut f64,
) -> MlStatus {
    let Some(pool) = (unsafe { pool.as_ref() }) else {
        return invalid("pool is null");
    };
    if out_params.is_null() {
        return invalid("out_params is null");
    }
    let utility = match UtilityConfig::new(interest_rate, subsidy) {
        Ok(u) => u,
        Err(e) => return fail(&e),
    };
    let cfg = LearnerConfig {
        link: link.into(),
        schedule: if constant_step > 0.0 {
            StepSchedule::Constant(constant_step)
        } else {
            LearnerConfig::default().schedule
        },
        multi_start: if multi_start != 0 {
            MultiStartConfig::default()
        } else {
            MultiStartConfig::single()
        },
        seed,
        ..LearnerConfig::default()
    };
    match run_learning(&pool.inner, &cfg, utility, periods, batch_size) {
        Ok(trajectory) => {
            let n = pool.inner.feature_dim();
            let out = unsafe { std::slice::from_raw_parts_mut(out_params, 2 * n) };
            match trajectory.per_period_z.last() {
                Some(z) => out.copy_from_slice(z),
                None => out.fill(0.0),
            }
            MlStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Execute a scenario config file end to end, writing result CSVs to
/// `out_dir`. `profile` is `"quick"` or `"paper"`; `seed_override` replaces
/// the config seed when nonnegative.
///
/// # Safety
/// `config_path`, `out_dir`, and `profile` must be valid NUL-terminated
/// strings.
#[no_mangle]
pub unsafe extern "C" fn ml_run_scenario_file(
    config_path: *const c_char,
    out_dir: *const c_char,
    profile: *const c_char,
    seed_override: i64,
) -> MlStatus {
    let (Some(config_path), Some(out_dir), Some(profile)) = (
        unsafe { str_arg(config_path) },
        unsafe { str_arg(out_dir) },
        unsafe { str_arg(profile) },
    ) else {
        return invalid("null or non-UTF-8 path argument");
    };
    let profile = match Profile::parse(profile) {
        Ok(p) => p,
        Err(e) => return fail(&e),
    };
    let file = match ConfigFile::load(&PathBuf::from(config_path)) {
        Ok(f) => f,
        Err(e) => return fail(&e),
    };
    let seed = if seed_override >= 0 {
        Some(seed_override as u64)
    } else {
        None
    };
    let (cfg, _) = match load_scenario(&file, profile, seed) {
        Ok(x) => x,
        Err(e) => return fail(&e),
    };
    let result = match run_scenario(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    match persist_results(&result, &PathBuf::from(out_dir)) {
        Ok(_) => MlStatus::Ok,
        Err(e) => fail(&e),
    }
}
