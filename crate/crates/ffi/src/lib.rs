//! C ABI for kinswitch.
//!
//! Configs and simulations are opaque handles created and freed through
//! this interface. Every fallible function returns a [`KsStatus`]; on
//! failure the message can be fetched with [`ks_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kinswitch::config::{preset, ExperimentConfig};
use kinswitch::fokker_planck::{stationary_density, ParetoParams};
use kinswitch::macroscopic::{stationary_alpha, TradeRates};
use kinswitch::nanbu::{empirical_stats, HistogramSpec, Simulation};
use kinswitch::stats::{wasserstein1, WeightedSample};
use kinswitch::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    TimeStep = 4,
    Model = 5,
    Domain = 6,
    MassMismatch = 7,
    Panic = 8,
}

impl From<&Error> for KsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Config { .. } | Error::UnknownPreset { .. } | Error::Io(_) => KsStatus::Config,
            Error::TimeStep { .. } => KsStatus::TimeStep,
            Error::InvalidModel(_)
            | Error::InvalidKernel { .. }
            | Error::PositivityGuard { .. }
            | Error::InconsistentKernel(_)
            | Error::DegenerateRates(_)
            | Error::InvalidLabel { .. } => KsStatus::Model,
            Error::Domain(_) | Error::DegenerateDiffusion | Error::UndefinedMean(_) => {
                KsStatus::Domain
            }
            Error::MassMismatch { .. } => KsStatus::MassMismatch,
            Error::EmptyPopulation | Error::InvalidArgument(_) => KsStatus::InvalidArgument,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> Result<(), (KsStatus, String)>) -> KsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            KsStatus::Panic
        }
    }
}

fn lift<T>(r: kinswitch::Result<T>) -> Result<T, (KsStatus, String)> {
    r.map_err(|e| (KsStatus::from(&e), e.to_string()))
}

fn null(what: &str) -> (KsStatus, String) {
    (KsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (KsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (KsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Opaque experiment configuration.
pub struct KsConfig(ExperimentConfig);

/// Opaque running Monte Carlo replica.
pub struct KsSimulation(Simulation);

/// Statistics of one label.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsLabelStats {
    pub count: u64,
    pub rho: f64,
    pub moment: f64,
    /// NaN when the label is empty.
    pub mean: f64,
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated, truncated to `len`) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ks_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ks_config_from_preset(name: *const c_char, out: *mut *mut KsConfig) -> KsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = lift(preset(str_arg(name, "name")?))?;
        *out = Box::into_raw(Box::new(KsConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ks_config_from_toml(text: *const c_char, out: *mut *mut KsConfig) -> KsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = lift(ExperimentConfig::parse(str_arg(text, "text")?, &[]))?;
        *out = Box::into_raw(Box::new(KsConfig(cfg)));
        Ok(())
    })
}

/// Applies one `dotted.key=value` override in place.
///
/// # Safety
/// `cfg` must come from this library and `kv` be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ks_config_override(cfg: *mut KsConfig, kv: *const c_char) -> KsStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        let kv = str_arg(kv, "kv")?.to_string();
        cfg.0 = lift(cfg.0.with_overrides(&[kv]))?;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn ks_config_free(cfg: *mut KsConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Samples the initial population of replica `replica`.
///
/// # Safety
/// `cfg` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ks_simulation_new(
    cfg: *const KsConfig,
    replica: u64,
    out: *mut *mut KsSimulation,
) -> KsStatus {
    guard(|| {
        let cfg = &cfg.as_ref().ok_or_else(|| null("cfg"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = lift(cfg.spec())?;
        let sim = lift(Simulation::from_initial(
            spec,
            cfg.step_config(),
            &cfg.initial,
            cfg.run.n_agents,
            replica,
        ))?;
        *out = Box::into_raw(Box::new(KsSimulation(sim)));
        Ok(())
    })
}

/// Advances by `steps` time steps.
///
/// # Safety
/// `sim` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn ks_simulation_step(sim: *mut KsSimulation, steps: u64) -> KsStatus {
    guard(|| {
        let sim = &mut sim.as_mut().ok_or_else(|| null("sim"))?.0;
        for _ in 0..steps {
            lift(sim.step())?;
        }
        Ok(())
    })
}

/// # Safety
/// `sim` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ks_simulation_time(sim: *const KsSimulation, out: *mut f64) -> KsStatus {
    guard(|| {
        let sim = &sim.as_ref().ok_or_else(|| null("sim"))?.0;
        *out.as_mut().ok_or_else(|| null("out"))? = sim.time();
        Ok(())
    })
}

/// Number of wealths clamped to zero so far.
///
/// # Safety
/// `sim` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ks_simulation_clamped(sim: *const KsSimulation, out: *mut u64) -> KsStatus {
    guard(|| {
        let sim = &sim.as_ref().ok_or_else(|| null("sim"))?.0;
        *out.as_mut().ok_or_else(|| null("out"))? = sim.population().clamped;
        Ok(())
    })
}

/// Statistics of label `label` (1-based).
///
/// # Safety
/// `sim` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ks_simulation_label_stats(
    sim: *const KsSimulation,
    label: u32,
    out: *mut KsLabelStats,
) -> KsStatus {
    guard(|| {
        let sim = &sim.as_ref().ok_or_else(|| null("sim"))?.0;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let pop = sim.population();
        let s = lift(empirical_stats(pop.agents(), pop.n_labels(), &HistogramSpec::Off))?;
        let i = (label as usize).wrapping_sub(1);
        if i >= pop.n_labels() {
            return Err((
                KsStatus::InvalidArgument,
                format!("label {label} outside 1..={}", pop.n_labels()),
            ));
        }
        *out = KsLabelStats {
            count: s.counts[i] as u64,
            rho: s.rho[i],
            moment: s.moment[i],
            mean: s.mean[i].unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// # Safety
/// `sim` must be null or come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn ks_simulation_free(sim: *mut KsSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Equilibrium mass ratio of the two-label trade model.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ks_stationary_alpha(
    b11_12: f64,
    b22_12: f64,
    b12_11: f64,
    b12_22: f64,
    out: *mut f64,
) -> KsStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = lift(stationary_alpha(&lift(TradeRates::new(b11_12, b22_12, b12_11, b12_22))?))?;
        Ok(())
    })
}

/// Label-1 steady density of the quasi-invariant limit at `v`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn ks_stationary_density(
    v: f64,
    alpha: f64,
    omega1: f64,
    omega2: f64,
    zeta: f64,
    rho_bar: f64,
    moment_bar: f64,
    out: *mut f64,
) -> KsStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let params = ParetoParams {
            alpha,
            omega1,
            omega2,
            zeta,
            rho_bar,
            moment_bar,
        };
        *out = lift(stationary_density(v, &params))?;
        Ok(())
    })
}

unsafe fn sample(points: *const f64, weights: *const f64, n: usize) -> Result<WeightedSample, (KsStatus, String)> {
    if n > 0 && (points.is_null() || weights.is_null()) {
        return Err(null("points/weights"));
    }
    let (p, w) = if n == 0 {
        (Vec::new(), Vec::new())
    } else {
        (
            std::slice::from_raw_parts(points, n).to_vec(),
            std::slice::from_raw_parts(weights, n).to_vec(),
        )
    };
    lift(WeightedSample::new(p, w))
}

/// W1 distance between two weighted point sets of equal mass.
///
/// # Safety
/// Each `points`/`weights` pointer must address `n` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn ks_wasserstein1(
    points_a: *const f64,
    weights_a: *const f64,
    n_a: usize,
    points_b: *const f64,
    weights_b: *const f64,
    n_b: usize,
    out: *mut f64,
) -> KsStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let a = sample(points_a, weights_a, n_a)?;
        let b = sample(points_b, weights_b, n_b)?;
        *out = lift(wasserstein1(&a, &b))?;
        Ok(())
    })
}
