//! C ABI for `qtrack`.
//!
//! Every fallible function returns a status code (`QTRACK_OK` on success)
//! and writes results through out-pointers. On failure a message describing
//! the error is kept per thread and can be read with
//! [`qtrack_last_error_message`]. Objects are opaque handles created by a
//! `*_new`/`*_compute` function and released with the matching `*_free`.
//!
//! The header `include/qtrack.h` is generated from this file by the build
//! script.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qtrack::harness::{estimate_with_stats, wilson_ci, ExperimentPlan, Prior};
use qtrack::info::{CapacityOptions, ChannelStats};
use qtrack::limits::{critical_rate, excess_prob_approx_log, log_resolution_approx, LogCoefficient};
use qtrack::scheme::Scheme;
use qtrack::{ChannelSpec, Error, TargetState};

pub const QTRACK_OK: c_int = 0;
/// A required pointer argument was null.
pub const QTRACK_ERR_NULL: c_int = 1;
/// A numeric argument is outside the operation's domain.
pub const QTRACK_ERR_DOMAIN: c_int = 2;
pub const QTRACK_ERR_INVALID: c_int = 3;
/// The hypothesis grid exceeds the decoding budget.
pub const QTRACK_ERR_BUDGET: c_int = 4;
pub const QTRACK_ERR_LENGTH: c_int = 5;
/// Information density undefined or empty capacity-achieving set.
pub const QTRACK_ERR_UNDEFINED: c_int = 6;
/// A Rust panic was caught at the boundary.
pub const QTRACK_ERR_PANIC: c_int = 7;

pub const QTRACK_PRIOR_UNIFORM: c_int = 0;
pub const QTRACK_PRIOR_WORST_CASE_GRID: c_int = 1;
pub const QTRACK_PRIOR_REPRESENTATIVE: c_int = 2;

/// A measurement-dependent binary symmetric channel.
pub struct QtrackChannel(ChannelSpec);

/// Capacity, capacity-achieving inputs and dispersion of a channel.
pub struct QtrackStats(ChannelStats);

/// A planned grid, codebook and decoder.
pub struct QtrackScheme(Scheme);

/// One row of [`qtrack_simulate`] output.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QtrackSummary {
    pub delta: f64,
    /// `-log(delta) / n` in nats per query.
    pub rate: f64,
    pub trials: u64,
    pub excess: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Gaussian approximation at the same resolution.
    pub eps_hat: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> c_int {
    match err.root() {
        Error::Domain { .. } => QTRACK_ERR_DOMAIN,
        Error::InvalidParameter(_) => QTRACK_ERR_INVALID,
        Error::Budget { .. } => QTRACK_ERR_BUDGET,
        Error::LengthMismatch { .. } => QTRACK_ERR_LENGTH,
        Error::UndefinedDensity { .. } | Error::EmptyCapacitySet => QTRACK_ERR_UNDEFINED,
        Error::Context { .. } => unreachable!("root strips context"),
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> c_int {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QTRACK_OK,
        Ok(Err(Fail::Null(name))) => {
            set_last_error(format!("null pointer passed as `{name}`"));
            QTRACK_ERR_NULL
        }
        Ok(Err(Fail::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            QTRACK_ERR_PANIC
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(name))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(Fail::Null(name))
    } else {
        Ok(std::slice::from_raw_parts(p, len))
    }
}

/// Message of the most recent failure on this thread, or null if none.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qtrack_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn qtrack_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version contains nul"),
    };
    VERSION.as_ptr()
}

/// Location on the unit torus at time `t` of a target that starts at `s`
/// with velocity `v`.
#[no_mangle]
pub extern "C" fn qtrack_locate(s: f64, v: f64, t: f64) -> f64 {
    qtrack::locate_scalar(s, v, t)
}

/// Creates a channel with crossover `zeta * (slope * |A| + intercept)`.
///
/// # Safety
/// `out_channel` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn qtrack_channel_new(
    zeta: f64,
    slope: f64,
    intercept: f64,
    out_channel: *mut *mut QtrackChannel,
) -> c_int {
    guard(|| {
        let slot = out(out_channel, "out_channel")?;
        let ch = ChannelSpec::from_params(zeta, slope, intercept)?;
        *slot = Box::into_raw(Box::new(QtrackChannel(ch)));
        Ok(())
    })
}

/// # Safety
/// `channel` must be null or a handle from [`qtrack_channel_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qtrack_channel_free(channel: *mut QtrackChannel) {
    if !channel.is_null() {
        drop(Box::from_raw(channel));
    }
}

/// Crossover probability for a query of Lebesgue measure `measure`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qtrack_channel_crossover(
    channel: *const QtrackChannel,
    measure: f64,
    out_crossover: *mut f64,
) -> c_int {
    guard(|| {
        let ch = deref(channel, "channel")?;
        let slot = out(out_crossover, "out_crossover")?;
        *slot = ch.0.transition_for_measure(measure)?.crossover();
        Ok(())
    })
}

/// Computes capacity and dispersion statistics of `channel`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qtrack_stats_compute(
    channel: *const QtrackChannel,
    out_stats: *mut *mut QtrackStats,
) -> c_int {
    guard(|| {
        let ch = deref(channel, "channel")?;
        let slot = out(out_stats, "out_stats")?;
        let stats = ChannelStats::compute(&ch.0, CapacityOptions::default())?;
        *slot = Box::into_raw(Box::new(QtrackStats(stats)));
        Ok(())
    })
}

/// # Safety
/// `stats` must be null or a handle from [`qtrack_stats_compute`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qtrack_stats_free(stats: *mut QtrackStats) {
    if !stats.is_null() {
        drop(Box::from_raw(stats));
    }
}

/// Capacity in nats per query, or NaN for a null handle.
///
/// # Safety
/// `stats` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qtrack_stats_capacity(stats: *const QtrackStats) -> f64 {
    stats.as_ref().map_or(f64::NAN, |s| s.0.capacity)
}

/// Smallest capacity-achieving input probability.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qtrack_stats_p_star(stats: *const QtrackStats, out_p: *mut f64) -> c_int {
    guard(|| {
        let s = deref(stats, "stats")?;
        *out(out_p, "out_p")? = s.0.p_star()?;
        Ok(())
    })
}

/// Dispersion selected for target probability `eps` (max over the
/// capacity-achieving set for `eps <= 1/2`, min otherwise).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qtrack_stats_dispersion(
    stats: *const QtrackStats,
    eps: f64,
    out_dispersion: *mut f64,
) -> c_int {
    guard(|| {
        let s = deref(stats, "stats")?;
        *out(out_dispersion, "out_dispersion")? = s.0.v_eps(eps)?;
        Ok(())
    })
}

/// Critical decay rate `C / (2d)`, or NaN for a null handle.
///
/// # Safety
/// `stats` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qtrack_critical_rate(d: usize, stats: *const QtrackStats) -> f64 {
    match stats.as_ref() {
        Some(s) if d > 0 => critical_rate(d, &s.0),
        _ => f64::NAN,
    }
}

/// Natural log of the approximate minimal resolution for `n` queries in
/// `d` dimensions at excess probability `eps`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qtrack_log_resolution_approx(
    n: usize,
    d: usize,
    eps: f64,
    stats: *const QtrackStats,
    out_log_delta: *mut f64,
) -> c_int {
    guard(|| {
        let s = deref(stats, "stats")?;
        *out(out_log_delta, "out_log_delta")? = log_resolution_approx(n, d, eps, &s.0)?;
        Ok(())
    })
}

/// Approximate excess-resolution probability at `log(delta)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qtrack_excess_prob_approx(
    n: usize,
    d: usize,
    log_delta: f64,
    stats: *const QtrackStats,
    out_eps: *mut f64,
) -> c_int {
    guard(|| {
        let s = deref(stats, "stats")?;
        *out(out_eps, "out_eps")? =
            excess_prob_approx_log(n, d, log_delta, &s.0, LogCoefficient::TwoD)?;
        Ok(())
    })
}

/// Wilson score interval for `k` successes out of `trials`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qtrack_wilson_ci(
    k: u64,
    trials: u64,
    level: f64,
    out_low: *mut f64,
    out_high: *mut f64,
) -> c_int {
    guard(|| {
        let lo = out(out_low, "out_low")?;
        let hi = out(out_high, "out_high")?;
        (*lo, *hi) = wilson_ci(k, trials, level)?;
        Ok(())
    })
}

/// Plans the hypothesis grid for resolution `delta` and draws the query
/// codebook with bias `p` from `seed`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qtrack_scheme_new(
    channel: *const QtrackChannel,
    delta: f64,
    n: usize,
    d: usize,
    v_max: f64,
    p: f64,
    seed: u64,
    budget: u64,
    out_scheme: *mut *mut QtrackScheme,
) -> c_int {
    guard(|| {
        let ch = deref(channel, "channel")?;
        let slot = out(out_scheme, "out_scheme")?;
        let scheme = Scheme::plan(ch.0, delta, n, d, v_max, p, seed, budget)?;
        *slot = Box::into_raw(Box::new(QtrackScheme(scheme)));
        Ok(())
    })
}

/// # Safety
/// `scheme` must be null or a handle from [`qtrack_scheme_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qtrack_scheme_free(scheme: *mut QtrackScheme) {
    if !scheme.is_null() {
        drop(Box::from_raw(scheme));
    }
}

/// Number of hypotheses, or 0 for a null handle.
///
/// # Safety
/// `scheme` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qtrack_scheme_hypotheses(scheme: *const QtrackScheme) -> usize {
    scheme.as_ref().map_or(0, |s| s.0.grid().hypotheses())
}

/// Noiseless answers `x_1..x_n` for a target; `s` and `v` hold `d` values
/// each, `out_bits` has room for `n`.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn qtrack_scheme_answers(
    scheme: *const QtrackScheme,
    s: *const f64,
    v: *const f64,
    d: usize,
    out_bits: *mut u8,
    n: usize,
) -> c_int {
    guard(|| {
        let sc = &deref(scheme, "scheme")?.0;
        let s = slice(s, d, "s")?.to_vec();
        let v = slice(v, d, "v")?.to_vec();
        let truth = TargetState::new(s, v, sc.grid().v_max())?;
        if n != sc.grid().n() {
            return Err(Error::LengthMismatch { expected: sc.grid().n(), got: n }.into());
        }
        if out_bits.is_null() {
            return Err(Fail::Null("out_bits"));
        }
        let bits = sc.answers(&truth)?;
        std::slice::from_raw_parts_mut(out_bits, n).copy_from_slice(&bits);
        Ok(())
    })
}

/// Decodes `n` noisy answers. Writes the hypothesis index and, when the
/// pointers are non-null, its `d` location and velocity estimates.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn qtrack_scheme_decode(
    scheme: *const QtrackScheme,
    y: *const u8,
    n: usize,
    out_index: *mut usize,
    out_s_hat: *mut f64,
    out_v_hat: *mut f64,
) -> c_int {
    guard(|| {
        let sc = &deref(scheme, "scheme")?.0;
        if n != sc.grid().n() {
            return Err(Error::LengthMismatch { expected: sc.grid().n(), got: n }.into());
        }
        let y = slice(y, n, "y")?;
        if let Some(&bad) = y.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidParameter(format!("answer symbol {bad} is not 0 or 1")).into());
        }
        let slot = out(out_index, "out_index")?;
        let decoded = sc.decode(y)?;
        *slot = decoded.index;
        let d = sc.grid().d();
        if !out_s_hat.is_null() {
            std::slice::from_raw_parts_mut(out_s_hat, d).copy_from_slice(decoded.estimate.location());
        }
        if !out_v_hat.is_null() {
            std::slice::from_raw_parts_mut(out_v_hat, d).copy_from_slice(decoded.estimate.velocity());
        }
        Ok(())
    })
}

/// Monte Carlo excess-resolution estimate for each of `n_deltas`
/// resolutions. `prior` is one of the `QTRACK_PRIOR_*` constants;
/// `grid_points` is used by the worst-case grid. `p <= 0` selects the
/// smallest capacity-achieving input. `out_rows` has room for `n_deltas`.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn qtrack_simulate(
    channel: *const QtrackChannel,
    n: usize,
    d: usize,
    v_max: f64,
    deltas: *const f64,
    n_deltas: usize,
    trials: usize,
    seed: u64,
    prior: c_int,
    grid_points: usize,
    p: f64,
    out_rows: *mut QtrackSummary,
) -> c_int {
    guard(|| {
        let ch = deref(channel, "channel")?;
        let deltas = slice(deltas, n_deltas, "deltas")?.to_vec();
        if out_rows.is_null() {
            return Err(Fail::Null("out_rows"));
        }
        let prior = match prior {
            QTRACK_PRIOR_UNIFORM => Prior::UniformProduct,
            QTRACK_PRIOR_WORST_CASE_GRID => Prior::WorstCaseGrid { points: grid_points },
            QTRACK_PRIOR_REPRESENTATIVE => Prior::Representative,
            other => return Err(Error::InvalidParameter(format!("unknown prior code {other}")).into()),
        };
        let stats = ChannelStats::compute(&ch.0, CapacityOptions::default())?;
        let mut plan = ExperimentPlan::new(ch.0, n, d, v_max, deltas);
        plan.trials = trials;
        plan.seed = seed;
        plan.prior = prior;
        plan.p = (p > 0.0).then_some(p);
        let rows = estimate_with_stats(&plan, &stats)?;
        let dst = std::slice::from_raw_parts_mut(out_rows, n_deltas);
        for (slot, r) in dst.iter_mut().zip(rows) {
            *slot = QtrackSummary {
                delta: r.delta,
                rate: r.rate,
                trials: r.trials,
                excess: r.excess,
                p_hat: r.p_hat,
                ci_low: r.ci_low,
                ci_high: r.ci_high,
                eps_hat: r.eps_hat,
            };
        }
        Ok(())
    })
}
