//! C ABI for `overlapq`.
//!
//! Queue parameters and simulated trajectories are opaque handles created by
//! `*_new`/`overlapq_simulate` and released by the matching `*_free`. Every
//! fallible call returns an [`OverlapqStatus`] and writes its result through
//! an out-pointer; on failure a message is available from
//! [`overlapq_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use overlapq::sim::{self, OverlapSeries, ReplicationStreams, Trajectory};
use overlapq::{DistributionSpec, Error, QueueParams};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlapqStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    RuntimeError = 3,
    Panic = 4,
}

/// Per-customer arrays exposed by [`overlapq_trajectory_copy`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlapqField {
    /// A_k, length n
    Interarrival = 0,
    /// S_k, length n
    Service = 1,
    /// W_k, length n
    Wait = 2,
    /// T_k, length n
    Arrival = 3,
    /// D_k, length n
    Departure = 4,
    /// O_{k,k+1}, length n - 1
    AdjacentOverlap = 5,
    /// M_k for interior customers, length n - 2
    MaxOverlap = 6,
    /// M*_k for interior customers, length n - 2
    MinOverlap = 7,
}

/// Opaque M/M/1 parameters.
pub struct OverlapqParams {
    inner: QueueParams,
}

/// Opaque simulated trajectory with its overlap series.
pub struct OverlapqTrajectory {
    traj: Trajectory,
    series: OverlapSeries,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> OverlapqStatus {
    if e.is_validation() {
        OverlapqStatus::InvalidArgument
    } else {
        OverlapqStatus::RuntimeError
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F>(f: F) -> OverlapqStatus
where
    F: FnOnce() -> Result<(), OverlapqStatus>,
{
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OverlapqStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            OverlapqStatus::Panic
        }
    }
}

fn fail(e: Error) -> OverlapqStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> OverlapqStatus {
    set_error(format!("{what} is null"));
    OverlapqStatus::NullPointer
}

unsafe fn params_ref<'a>(p: *const OverlapqParams) -> Result<&'a QueueParams, OverlapqStatus> {
    p.as_ref().map(|p| &p.inner).ok_or_else(|| null("params"))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), OverlapqStatus> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(v);
    Ok(())
}

unsafe fn c_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, OverlapqStatus> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        OverlapqStatus::InvalidArgument
    })
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn overlapq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn overlapq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Creates M/M/1 parameters; fails with `InvalidArgument` unless 0 < lambda < mu.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn overlapq_params_new(lambda: f64, mu: f64, out: *mut *mut OverlapqParams) -> OverlapqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = QueueParams::new(lambda, mu).map_err(fail)?;
        out.write(Box::into_raw(Box::new(OverlapqParams { inner })));
        Ok(())
    })
}

/// # Safety
/// `params` must come from [`overlapq_params_new`] and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn overlapq_params_free(params: *mut OverlapqParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

unsafe fn eval_fallible<A>(
    params: *const OverlapqParams,
    arg: A,
    out: *mut f64,
    f: impl FnOnce(&QueueParams, A) -> overlapq::Result<f64>,
) -> OverlapqStatus {
    guard(|| {
        let q = params_ref(params)?;
        let v = f(q, arg).map_err(fail)?;
        write_out(out, v)
    })
}

unsafe fn eval_const(params: *const OverlapqParams, out: *mut f64, f: impl FnOnce(&QueueParams) -> f64) -> OverlapqStatus {
    guard(|| {
        let q = params_ref(params)?;
        write_out(out, f(q))
    })
}

/// P(W > t).
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn overlapq_wait_tail(params: *const OverlapqParams, t: f64, out: *mut f64) -> OverlapqStatus {
    eval_fallible(params, t, out, QueueParams::wait_tail)
}

/// P(M > t) for the maximum adjacent overlap.
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn overlapq_max_tail(params: *const OverlapqParams, t: f64, out: *mut f64) -> OverlapqStatus {
    eval_fallible(params, t, out, QueueParams::max_tail)
}

/// P(M* > t) for the minimum adjacent overlap.
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn overlapq_min_tail(params: *const OverlapqParams, t: f64, out: *mut f64) -> OverlapqStatus {
    eval_fallible(params, t, out, QueueParams::min_tail)
}

/// E[exp(-theta M)].
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn overlapq_max_transform(params: *const OverlapqParams, theta: f64, out: *mut f64) -> OverlapqStatus {
    eval_fallible(params, theta, out, QueueParams::max_transform)
}

/// E[exp(-theta M*)].
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn overlapq_min_transform(params: *const OverlapqParams, theta: f64, out: *mut f64) -> OverlapqStatus {
    eval_fallible(params, theta, out, QueueParams::min_transform)
}

/// P(M = 0).
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn overlapq_max_atom_zero(params: *const OverlapqParams, out: *mut f64) -> OverlapqStatus {
    eval_const(params, out, QueueParams::max_atom_zero)
}

/// P(M* = 0).
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn overlapq_min_atom_zero(params: *const OverlapqParams, out: *mut f64) -> OverlapqStatus {
    eval_const(params, out, QueueParams::min_atom_zero)
}

/// Var[M].
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn overlapq_max_variance(params: *const OverlapqParams, out: *mut f64) -> OverlapqStatus {
    eval_const(params, out, QueueParams::max_variance)
}

/// Var[M*].
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn overlapq_min_variance(params: *const OverlapqParams, out: *mut f64) -> OverlapqStatus {
    eval_const(params, out, QueueParams::min_variance)
}

/// E[M^p] for 1 <= p <= 20.
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn overlapq_max_moment(params: *const OverlapqParams, p: u32, out: *mut f64) -> OverlapqStatus {
    eval_fallible(params, p, out, QueueParams::max_moment)
}

/// E[(M*)^p] for 1 <= p <= 20.
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn overlapq_min_moment(params: *const OverlapqParams, p: u32, out: *mut f64) -> OverlapqStatus {
    eval_fallible(params, p, out, QueueParams::min_moment)
}

/// Density of service minus interarrival time at `z`.
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn overlapq_diff_density(params: *const OverlapqParams, z: f64, out: *mut f64) -> OverlapqStatus {
    eval_const(params, out, |q| q.diff_density(z))
}

/// Simulates `n` customers of a G/G/1 queue. Distributions use the
/// `exp:rate`, `det:value`, `erlang:k:rate`, `unif:a:b` syntax; the same
/// `(seed, replication)` always gives the same trajectory.
///
/// # Safety
/// `arrival` and `service` must be NUL-terminated strings; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn overlapq_simulate(
    arrival: *const c_char,
    service: *const c_char,
    n: u64,
    seed: u64,
    replication: u64,
    out: *mut *mut OverlapqTrajectory,
) -> OverlapqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let a: DistributionSpec = c_str(arrival, "arrival")?.parse().map_err(fail)?;
        let s: DistributionSpec = c_str(service, "service")?.parse().map_err(fail)?;
        let n = usize::try_from(n).map_err(|_| fail(Error::InvalidArgument("n too large".into())))?;
        let mut streams = ReplicationStreams::new(seed, replication);
        let traj = sim::simulate(&a, &s, n, &mut streams).map_err(fail)?;
        let series = sim::overlap_series(&traj);
        out.write(Box::into_raw(Box::new(OverlapqTrajectory { traj, series })));
        Ok(())
    })
}

/// Number of customers, or 0 for NULL.
///
/// # Safety
/// `traj` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn overlapq_trajectory_len(traj: *const OverlapqTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.traj.len())
}

/// Copies one per-customer array into `buf`. Fails with `InvalidArgument`
/// if `capacity` is smaller than the array; `written` receives its length
/// either way.
///
/// # Safety
/// `traj` must be a live handle, `buf` must hold `capacity` doubles and
/// `written` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn overlapq_trajectory_copy(
    traj: *const OverlapqTrajectory,
    field: OverlapqField,
    buf: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> OverlapqStatus {
    guard(|| {
        let t = traj.as_ref().ok_or_else(|| null("trajectory"))?;
        let data: &[f64] = match field {
            OverlapqField::Interarrival => t.traj.interarrivals(),
            OverlapqField::Service => t.traj.services(),
            OverlapqField::Wait => t.traj.waits(),
            OverlapqField::Arrival => t.traj.arrivals(),
            OverlapqField::Departure => t.traj.departures(),
            OverlapqField::AdjacentOverlap => &t.series.adjacent,
            OverlapqField::MaxOverlap => &t.series.max,
            OverlapqField::MinOverlap => &t.series.min,
        };
        write_out(written, data.len())?;
        if data.len() > capacity {
            set_error(format!("buffer holds {capacity} values, need {}", data.len()));
            return Err(OverlapqStatus::InvalidArgument);
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
        Ok(())
    })
}

/// # Safety
/// `traj` must come from [`overlapq_simulate`] and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn overlapq_trajectory_free(traj: *mut OverlapqTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}
