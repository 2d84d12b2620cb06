//! C ABI over `giardia-core`.
//!
//! Every function returns a [`GiardiaStatus`]; results go through out
//! pointers. On failure, [`giardia_last_error`] returns a message for the
//! calling thread. Configs and trajectories are opaque handles released with
//! their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use giardia_core::analysis::{self, DoseUnit, MICROMOLAR_PER_UGML};
use giardia_core::io::{self, RunConfig, Strategy};
use giardia_core::sim::{check_envelope, check_observer_bound};
use giardia_core::{control, observer, AdaptiveConfig, Error, ModelParams, PlantState, Profile, Trajectory};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GiardiaStatus {
    Ok = 0,
    /// Argument outside the domain of the operation.
    Domain = 1,
    /// One or more parameter or configuration invariants failed.
    Validation = 2,
    /// Non-finite state or a negative population during integration.
    Numeric = 3,
    /// Malformed input file.
    Parse = 4,
    Config = 5,
    Io = 6,
    NullPointer = 7,
    InvalidUtf8 = 8,
    OutOfRange = 9,
    /// A Rust panic was caught at the boundary.
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GiardiaProfile {
    /// eta used as configured, with a warning when it is too small.
    Paper = 0,
    /// eta raised to the smallest value that certifies the envelope.
    Theorem = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GiardiaDoseUnit {
    MicrogramPerMl = 0,
    MicroMolar = 1,
}

/// Plant constants.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GiardiaModelParams {
    pub r0: f64,
    pub k: f64,
    pub beta_d: f64,
    pub beta_m: f64,
    pub w_m: f64,
    pub sigma: f64,
}

/// Designer bounds of the adaptive dose law.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GiardiaAdaptiveConfig {
    pub r0_bar: f64,
    pub beta_m_bar: f64,
    pub beta_d_low: f64,
    pub eta: f64,
    pub delta: f64,
}

/// One trajectory sample. `envelope` is meaningful only when `has_envelope`
/// is non-zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GiardiaRecord {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    pub x2_hat: f64,
    pub u_ugml: f64,
    pub u_um: f64,
    pub r: f64,
    pub envelope: f64,
    pub has_envelope: u8,
    pub pi: f64,
}

/// Opaque run configuration.
pub struct GiardiaConfig {
    inner: RunConfig,
}

/// Opaque simulation result.
pub struct GiardiaTrajectory {
    inner: Trajectory,
    warnings: Vec<CString>,
}

struct Failure {
    status: GiardiaStatus,
    message: String,
}

impl Failure {
    fn new(status: GiardiaStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Domain(_) => GiardiaStatus::Domain,
            Error::Validation(_) => GiardiaStatus::Validation,
            Error::Numeric { .. } => GiardiaStatus::Numeric,
            Error::Parse { .. } => GiardiaStatus::Parse,
            Error::Config(_) => GiardiaStatus::Config,
            Error::Io { .. } => GiardiaStatus::Io,
        };
        Failure::new(status, e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> GiardiaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GiardiaStatus::Ok,
        Ok(Err(fail)) => {
            set_last_error(fail.message);
            fail.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            GiardiaStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    p.as_ref()
        .ok_or_else(|| Failure::new(GiardiaStatus::NullPointer, format!("{name} is NULL")))
}

unsafe fn deref_mut<'a, T>(p: *mut T, name: &str) -> FfiResult<&'a mut T> {
    p.as_mut()
        .ok_or_else(|| Failure::new(GiardiaStatus::NullPointer, format!("{name} is NULL")))
}

unsafe fn write_out<T>(p: *mut T, name: &str, v: T) -> FfiResult<()> {
    *deref_mut(p, name)? = v;
    Ok(())
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Failure::new(
            GiardiaStatus::NullPointer,
            format!("{name} is NULL"),
        ));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(GiardiaStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

fn model(p: &GiardiaModelParams) -> FfiResult<ModelParams> {
    Ok(ModelParams::new(p.r0, p.k, p.beta_d, p.beta_m, p.w_m, p.sigma)?)
}

fn adaptive(c: &GiardiaAdaptiveConfig) -> FfiResult<AdaptiveConfig> {
    Ok(AdaptiveConfig::new(
        c.r0_bar,
        c.beta_m_bar,
        c.beta_d_low,
        c.eta,
        c.delta,
    )?)
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn giardia_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Published plant constants.
#[no_mangle]
pub extern "C" fn giardia_model_params_published() -> GiardiaModelParams {
    let p = ModelParams::PUBLISHED;
    GiardiaModelParams {
        r0: p.r0(),
        k: p.k(),
        beta_d: p.beta_d(),
        beta_m: p.beta_m(),
        w_m: p.w_m(),
        sigma: p.sigma(),
    }
}

/// Published adaptive design (`eta = delta`).
#[no_mangle]
pub extern "C" fn giardia_adaptive_config_published() -> GiardiaAdaptiveConfig {
    let c = AdaptiveConfig::PUBLISHED;
    GiardiaAdaptiveConfig {
        r0_bar: c.r0_bar,
        beta_m_bar: c.beta_m_bar,
        beta_d_low: c.beta_d_low,
        eta: c.eta,
        delta: c.delta,
    }
}

/// Growth rate `r` at state `(x1, x2)` under dose `u` (μg/ml).
///
/// # Safety
/// `params` and `out` must be valid pointers or NULL.
#[no_mangle]
pub unsafe extern "C" fn giardia_growth_rate(
    params: *const GiardiaModelParams,
    x1: f64,
    x2: f64,
    u: f64,
    out: *mut f64,
) -> GiardiaStatus {
    guard(|| {
        let p = model(deref(params, "params")?)?;
        let r = p.growth_rate(&PlantState { x1, x2 }, u)?;
        write_out(out, "out", r)
    })
}

/// Plant vector field at `(x1, x2)` under dose `u`.
///
/// # Safety
/// All pointers must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn giardia_vector_field(
    params: *const GiardiaModelParams,
    x1: f64,
    x2: f64,
    u: f64,
    dx1: *mut f64,
    dx2: *mut f64,
) -> GiardiaStatus {
    guard(|| {
        let p = model(deref(params, "params")?)?;
        let d = p.vector_field(&PlantState { x1, x2 }, u)?;
        deref_mut(dx2, "dx2")?;
        write_out(dx1, "dx1", d.dx1)?;
        write_out(dx2, "dx2", d.dx2)
    })
}

/// Open-loop equilibrium `(K, x2*)`.
///
/// # Safety
/// All pointers must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn giardia_open_loop_equilibrium(
    params: *const GiardiaModelParams,
    x1_star: *mut f64,
    x2_star: *mut f64,
) -> GiardiaStatus {
    guard(|| {
        let p = model(deref(params, "params")?)?;
        let eq = p.open_loop_equilibrium()?;
        deref_mut(x2_star, "x2_star")?;
        write_out(x1_star, "x1_star", eq.x1)?;
        write_out(x2_star, "x2_star", eq.x2)
    })
}

/// Adaptive dose (μg/ml) for output `y` and observer state `x2_hat`.
///
/// # Safety
/// `config` and `out` must be valid pointers or NULL.
#[no_mangle]
pub unsafe extern "C" fn giardia_adaptive_dose(
    config: *const GiardiaAdaptiveConfig,
    y: f64,
    x2_hat: f64,
    out: *mut f64,
) -> GiardiaStatus {
    guard(|| {
        let c = adaptive(deref(config, "config")?)?;
        write_out(out, "out", control::clamp_nonneg(c.dose(y, x2_hat)))
    })
}

/// Smallest eta that certifies the envelope.
///
/// # Safety
/// `out` must be a valid pointer or NULL.
#[no_mangle]
pub unsafe extern "C" fn giardia_min_eta(
    beta_m_bar: f64,
    x2_0_abs: f64,
    x2_hat_0_abs: f64,
    delta: f64,
    out: *mut f64,
) -> GiardiaStatus {
    guard(|| {
        write_out(
            out,
            "out",
            control::min_eta(beta_m_bar, x2_0_abs, x2_hat_0_abs, delta)?,
        )
    })
}

/// Known-parameter constant dose (μg/ml) for decay rate `delta`.
///
/// # Safety
/// `params` and `out` must be valid pointers or NULL.
#[no_mangle]
pub unsafe extern "C" fn giardia_constant_dose(
    params: *const GiardiaModelParams,
    delta: f64,
    out: *mut f64,
) -> GiardiaStatus {
    guard(|| {
        let p = model(deref(params, "params")?)?;
        write_out(out, "out", control::constant_dose(&p, delta)?)
    })
}

/// Closed-form Riccati bound on the population at time `t`.
///
/// # Safety
/// `out` must be a valid pointer or NULL.
#[no_mangle]
pub unsafe extern "C" fn giardia_riccati_bound(
    y0: f64,
    k: f64,
    delta: f64,
    t: f64,
    out: *mut f64,
) -> GiardiaStatus {
    guard(|| write_out(out, "out", analysis::riccati_bound(y0, k, delta, t)?))
}

/// Observer slack `pi(t)`.
///
/// # Safety
/// `out` must be a valid pointer or NULL.
#[no_mangle]
pub unsafe extern "C" fn giardia_pi_bound(
    lambda: f64,
    x2_0_abs: f64,
    x2_hat_0_abs: f64,
    t: f64,
    out: *mut f64,
) -> GiardiaStatus {
    guard(|| write_out(out, "out", observer::pi_bound(lambda, x2_0_abs, x2_hat_0_abs, t)?))
}

/// Converts a dose from `from` into the other unit.
///
/// # Safety
/// `out` must be a valid pointer or NULL.
#[no_mangle]
pub unsafe extern "C" fn giardia_convert_dose(
    value: f64,
    from: GiardiaDoseUnit,
    out: *mut f64,
) -> GiardiaStatus {
    guard(|| {
        let unit = match from {
            GiardiaDoseUnit::MicrogramPerMl => DoseUnit::MicrogramPerMl,
            GiardiaDoseUnit::MicroMolar => DoseUnit::MicroMolar,
        };
        write_out(out, "out", analysis::convert_dose(value, unit)?)
    })
}

/// Shipped default configuration.
///
/// # Safety
/// `out` must be a valid pointer or NULL.
#[no_mangle]
pub unsafe extern "C" fn giardia_config_default(out: *mut *mut GiardiaConfig) -> GiardiaStatus {
    guard(|| {
        let cfg = io::parse_config_str(io::DEFAULT_CONFIG, Path::new("<default>"))?;
        write_out(out, "out", Box::into_raw(Box::new(GiardiaConfig { inner: cfg })))
    })
}

/// Loads and validates a JSON configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string or NULL; `out` valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn giardia_config_load(
    path: *const c_char,
    out: *mut *mut GiardiaConfig,
) -> GiardiaStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        deref_mut(out, "out")?;
        let cfg = io::parse_config(Path::new(path))?;
        write_out(out, "out", Box::into_raw(Box::new(GiardiaConfig { inner: cfg })))
    })
}

/// Selects the dose strategy: `open-loop`, `constant`, `adaptive`,
/// `schedule` or `schedule:<file>`.
///
/// # Safety
/// `config` must come from this library; `strategy` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn giardia_config_set_strategy(
    config: *mut GiardiaConfig,
    strategy: *const c_char,
) -> GiardiaStatus {
    guard(|| {
        let cfg = deref_mut(config, "config")?;
        let s: Strategy = str_arg(strategy, "strategy")?
            .parse()
            .map_err(|m: String| Failure::new(GiardiaStatus::Config, m))?;
        cfg.inner.controller = cfg.inner.controller_spec.build(&s)?;
        cfg.inner.strategy = s;
        Ok(())
    })
}

/// # Safety
/// `config` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn giardia_config_set_profile(
    config: *mut GiardiaConfig,
    profile: GiardiaProfile,
) -> GiardiaStatus {
    guard(|| {
        deref_mut(config, "config")?.inner.sim.profile = match profile {
            GiardiaProfile::Paper => Profile::Paper,
            GiardiaProfile::Theorem => Profile::Theorem,
        };
        Ok(())
    })
}

/// Sets the horizon, step and recording stride. Validated on simulate.
///
/// # Safety
/// `config` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn giardia_config_set_grid(
    config: *mut GiardiaConfig,
    t_end: f64,
    dt: f64,
    record_stride: usize,
) -> GiardiaStatus {
    guard(|| {
        let sim = &mut deref_mut(config, "config")?.inner.sim;
        sim.t_end = t_end;
        sim.dt = dt;
        sim.record_stride = record_stride;
        Ok(())
    })
}

/// # Safety
/// `config` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn giardia_config_free(config: *mut GiardiaConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Integrates the closed loop described by `config`.
///
/// # Safety
/// `config` must come from this library; `out` valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn giardia_simulate(
    config: *const GiardiaConfig,
    out: *mut *mut GiardiaTrajectory,
) -> GiardiaStatus {
    guard(|| {
        let cfg = &deref(config, "config")?.inner;
        deref_mut(out, "out")?;
        let tr = giardia_core::simulate(&cfg.model, &cfg.observer, &cfg.controller, &cfg.sim)?;
        let warnings = tr
            .warnings
            .iter()
            .map(|w| CString::new(w.replace('\0', " ")).expect("interior NULs removed"))
            .collect();
        write_out(
            out,
            "out",
            Box::into_raw(Box::new(GiardiaTrajectory { inner: tr, warnings })),
        )
    })
}

/// Number of recorded samples.
///
/// # Safety
/// `traj` must come from this library; `out` valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn giardia_trajectory_len(
    traj: *const GiardiaTrajectory,
    out: *mut usize,
) -> GiardiaStatus {
    guard(|| write_out(out, "out", deref(traj, "traj")?.inner.records.len()))
}

/// # Safety
/// `traj` must come from this library; `out` valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn giardia_trajectory_get(
    traj: *const GiardiaTrajectory,
    index: usize,
    out: *mut GiardiaRecord,
) -> GiardiaStatus {
    guard(|| {
        let records = &deref(traj, "traj")?.inner.records;
        let r = records.get(index).ok_or_else(|| {
            Failure::new(
                GiardiaStatus::OutOfRange,
                format!("index {index} out of range (len {})", records.len()),
            )
        })?;
        write_out(
            out,
            "out",
            GiardiaRecord {
                t: r.t,
                x1: r.x1,
                x2: r.x2,
                x2_hat: r.x2_hat,
                u_ugml: r.u,
                u_um: r.u * MICROMOLAR_PER_UGML,
                r: r.r,
                envelope: r.envelope.unwrap_or(f64::NAN),
                has_envelope: r.envelope.is_some() as u8,
                pi: r.pi,
            },
        )
    })
}

/// Number of configuration warnings raised by the run.
///
/// # Safety
/// `traj` must come from this library; `out` valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn giardia_trajectory_warning_count(
    traj: *const GiardiaTrajectory,
    out: *mut usize,
) -> GiardiaStatus {
    guard(|| write_out(out, "out", deref(traj, "traj")?.warnings.len()))
}

/// Warning `index`; the string lives as long as `traj`.
///
/// # Safety
/// `traj` must come from this library; `out` valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn giardia_trajectory_warning(
    traj: *const GiardiaTrajectory,
    index: usize,
    out: *mut *const c_char,
) -> GiardiaStatus {
    guard(|| {
        let w = &deref(traj, "traj")?.warnings;
        let s = w.get(index).ok_or_else(|| {
            Failure::new(
                GiardiaStatus::OutOfRange,
                format!("warning {index} out of range (len {})", w.len()),
            )
        })?;
        write_out(out, "out", s.as_ptr())
    })
}

/// Writes the trajectory in the CLI's CSV format.
///
/// # Safety
/// `traj` must come from this library; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn giardia_trajectory_write_csv(
    traj: *const GiardiaTrajectory,
    path: *const c_char,
) -> GiardiaStatus {
    guard(|| {
        let tr = deref(traj, "traj")?;
        let path = str_arg(path, "path")?;
        Ok(io::write_trajectory_csv(Path::new(path), &tr.inner.records)?)
    })
}

/// Counts samples above `y(0) e^(-delta t)`.
///
/// # Safety
/// `traj` must come from this library; `violations` valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn giardia_trajectory_check_envelope(
    traj: *const GiardiaTrajectory,
    delta: f64,
    violations: *mut usize,
) -> GiardiaStatus {
    guard(|| {
        let records = &deref(traj, "traj")?.inner.records;
        let y0 = records
            .first()
            .ok_or_else(|| Failure::new(GiardiaStatus::Validation, "trajectory is empty"))?
            .x1;
        write_out(violations, "violations", check_envelope(records, y0, delta).len())
    })
}

/// Counts samples where `|x2| > x2_hat + pi(t)`.
///
/// # Safety
/// `traj` must come from this library; `violations` valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn giardia_trajectory_check_observer(
    traj: *const GiardiaTrajectory,
    lambda: f64,
    x2_0_abs: f64,
    x2_hat_0_abs: f64,
    violations: *mut usize,
) -> GiardiaStatus {
    guard(|| {
        let records = &deref(traj, "traj")?.inner.records;
        write_out(
            violations,
            "violations",
            check_observer_bound(records, lambda, x2_0_abs, x2_hat_0_abs).len(),
        )
    })
}

/// # Safety
/// `traj` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn giardia_trajectory_free(traj: *mut GiardiaTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}
