//! C ABI for tdsnc.
//!
//! Objects cross the boundary as opaque handles created by `tdsnc_*_new`-style
//! constructors and released with the matching `*_free`. Every fallible call
//! returns a [`TdsncStatus`]; the message of the last failure on the calling
//! thread is available through [`tdsnc_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use tdsnc::analysis::{delay_bound, AnalysisError, DelayBound};
use tdsnc::bounding::BoundingFn;
use tdsnc::curve::{max_plus_conv, min_plus_conv, Curve, Ext, GridSpec, Rounding};
use tdsnc::models::{constant_server, gcra_arrival, md1_vsd_arrival, wireless_id_server, ServerModel, TrafficModel};
use tdsnc::report::{run, write_outputs, Mode, Report};
use tdsnc::scenario::{load_scenario, parse_scenario, Scenario, ScenarioError};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TdsncStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Unresolved = 4,
    Unstable = 5,
    Io = 6,
    Resource = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TdsncMode {
    Analyze = 0,
    Simulate = 1,
    Verify = 2,
}

pub struct TdsncCurve(Curve);
pub struct TdsncBound(BoundingFn);
pub struct TdsncTraffic(TrafficModel);
pub struct TdsncServer(ServerModel);
pub struct TdsncDelay(DelayBound);
pub struct TdsncScenario(Scenario);
pub struct TdsncReport(Report);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Fail(TdsncStatus, String);

impl Fail {
    fn arg(e: impl std::fmt::Display) -> Self {
        Fail(TdsncStatus::InvalidArgument, e.to_string())
    }
}

impl From<ScenarioError> for Fail {
    fn from(e: ScenarioError) -> Self {
        let status = match &e {
            ScenarioError::Io { .. } => TdsncStatus::Io,
            ScenarioError::Parse { .. } => TdsncStatus::Parse,
            ScenarioError::Unresolved { .. } => TdsncStatus::Unresolved,
            ScenarioError::Stability { .. } => TdsncStatus::Unstable,
            ScenarioError::Resource(_) => TdsncStatus::Resource,
            ScenarioError::Invalid(_) | ScenarioError::Analysis { .. } => TdsncStatus::InvalidArgument,
        };
        Fail(status, e.to_string())
    }
}

impl From<AnalysisError> for Fail {
    fn from(e: AnalysisError) -> Self {
        let status = match e {
            AnalysisError::Unstable(_) => TdsncStatus::Unstable,
            _ => TdsncStatus::InvalidArgument,
        };
        Fail(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TdsncStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TdsncStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TdsncStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(TdsncStatus::NullPointer, "null handle".into()))
}

unsafe fn put<T>(out: *mut *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(TdsncStatus::NullPointer, "null output pointer".into()));
    }
    *out = Box::into_raw(Box::new(v));
    Ok(())
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(TdsncStatus::NullPointer, "null output pointer".into()));
    }
    *out = v;
    Ok(())
}

unsafe fn c_str<'a>(s: *const c_char) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(Fail(TdsncStatus::NullPointer, "null string".into()));
    }
    CStr::from_ptr(s).to_str().map_err(|_| Fail::arg("string is not UTF-8"))
}

fn grid(step: f64, horizon: f64) -> Result<GridSpec, Fail> {
    GridSpec::new(step, horizon).map_err(Fail::arg)
}

/// Copies `s` into `buf` with a terminating NUL when it fits; `*needed` gets the full length plus one.
unsafe fn copy_out(s: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> Result<(), Fail> {
    if !needed.is_null() {
        *needed = s.len() + 1;
    }
    if buf.is_null() || len == 0 {
        return Ok(());
    }
    if len < s.len() + 1 {
        return Err(Fail::arg(format!("buffer of {len} bytes, {} needed", s.len() + 1)));
    }
    std::ptr::copy_nonoverlapping(s.as_ptr(), buf.cast(), s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn tdsnc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Piecewise-linear curve through `n` breakpoints, continued with `tail_slope`.
///
/// # Safety
/// `xs` and `vs` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_curve_new(
    xs: *const f64,
    vs: *const f64,
    n: usize,
    tail_slope: f64,
    out: *mut *mut TdsncCurve,
) -> TdsncStatus {
    guard(|| {
        if n > 0 && (xs.is_null() || vs.is_null()) {
            return Err(Fail(TdsncStatus::NullPointer, "null breakpoint array".into()));
        }
        let pts = if n == 0 {
            Vec::new()
        } else {
            let (xs, vs) = (std::slice::from_raw_parts(xs, n), std::slice::from_raw_parts(vs, n));
            xs.iter().copied().zip(vs.iter().copied()).collect()
        };
        put(out, TdsncCurve(Curve::new(pts, tail_slope).map_err(Fail::arg)?))
    })
}

/// # Safety
/// `c` must be NULL or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_curve_free(c: *mut TdsncCurve) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// # Safety
/// `c` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_curve_eval(c: *const TdsncCurve, x: f64, out: *mut f64) -> TdsncStatus {
    guard(|| write(out, get(c)?.0.at(x)))
}

/// Max-plus (`max_plus = 1`) or min-plus convolution evaluated on the grid `{0, step, .., horizon}`.
///
/// # Safety
/// `a` and `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_curve_conv(
    a: *const TdsncCurve,
    b: *const TdsncCurve,
    max_plus: i32,
    step: f64,
    horizon: f64,
    out: *mut *mut TdsncCurve,
) -> TdsncStatus {
    guard(|| {
        let (a, b, g) = (get(a)?, get(b)?, grid(step, horizon)?);
        let c = if max_plus != 0 {
            max_plus_conv(&a.0, &b.0, &g, Rounding::Nearest)
        } else {
            min_plus_conv(&a.0, &b.0, &g, Rounding::Nearest)
        };
        put(out, TdsncCurve(c))
    })
}

/// Bounding function `min(1, a e^{-b x})`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_bound_exponential(a: f64, b: f64, out: *mut *mut TdsncBound) -> TdsncStatus {
    guard(|| put(out, TdsncBound(BoundingFn::exponential(a, b).map_err(Fail::arg)?)))
}

/// # Safety
/// `f` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_bound_free(f: *mut TdsncBound) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// # Safety
/// `f` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_bound_eval(f: *const TdsncBound, x: f64, out: *mut f64) -> TdsncStatus {
    guard(|| write(out, get(f)?.0.eval(x)))
}

/// GCRA-shaped deterministic envelope.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_traffic_gcra(t: f64, tau: f64, out: *mut *mut TdsncTraffic) -> TdsncStatus {
    guard(|| put(out, TdsncTraffic(gcra_arrival(t, tau).map_err(Fail::arg)?)))
}

/// Poisson packets of rate `mu` seen by a server of constant service time `d`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_traffic_md1(mu: f64, d: f64, out: *mut *mut TdsncTraffic) -> TdsncStatus {
    guard(|| put(out, TdsncTraffic(md1_vsd_arrival(mu, d).map_err(Fail::arg)?)))
}

/// # Safety
/// `m` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_traffic_free(m: *mut TdsncTraffic) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_server_constant(t: f64, out: *mut *mut TdsncServer) -> TdsncStatus {
    guard(|| put(out, TdsncServer(constant_server(t).map_err(Fail::arg)?)))
}

/// Slotted lossy link; a negative `headroom` selects the default.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_server_wireless(
    delta: f64,
    pe: f64,
    headroom: f64,
    step: f64,
    horizon: f64,
    out: *mut *mut TdsncServer,
) -> TdsncStatus {
    guard(|| {
        let h = (headroom >= 0.0).then_some(headroom);
        put(out, TdsncServer(wireless_id_server(delta, pe, h, &grid(step, horizon)?).map_err(Fail::arg)?))
    })
}

/// # Safety
/// `m` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_server_free(m: *mut TdsncServer) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Delay bound of `traffic` through `server`; [`TdsncStatus::Unstable`] when the server is too slow.
///
/// # Safety
/// `traffic` and `server` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_delay_bound(
    traffic: *const TdsncTraffic,
    server: *const TdsncServer,
    step: f64,
    horizon: f64,
    out: *mut *mut TdsncDelay,
) -> TdsncStatus {
    guard(|| {
        let d = delay_bound(&get(traffic)?.0, &get(server)?.0, &grid(step, horizon)?)?;
        put(out, TdsncDelay(d))
    })
}

/// # Safety
/// `d` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_delay_free(d: *mut TdsncDelay) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// `P{delay > x}` bound.
///
/// # Safety
/// `d` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_delay_prob(d: *const TdsncDelay, x: f64, out: *mut f64) -> TdsncStatus {
    guard(|| write(out, get(d)?.0.prob(x)))
}

/// Smallest grid delay violated with probability at most `eps`; infinity if none within the horizon.
///
/// # Safety
/// `d` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_delay_quantile(
    d: *const TdsncDelay,
    eps: f64,
    step: f64,
    horizon: f64,
    out: *mut f64,
) -> TdsncStatus {
    guard(|| {
        let q = match get(d)?.0.quantile(eps, &grid(step, horizon)?) {
            Ext::Finite(v) => v,
            Ext::Unbounded => f64::INFINITY,
        };
        write(out, q)
    })
}

/// Scenario from a JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_scenario_load(path: *const c_char, out: *mut *mut TdsncScenario) -> TdsncStatus {
    guard(|| put(out, TdsncScenario(load_scenario(Path::new(c_str(path)?))?)))
}

/// Scenario from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_scenario_parse(json: *const c_char, out: *mut *mut TdsncScenario) -> TdsncStatus {
    guard(|| put(out, TdsncScenario(parse_scenario(c_str(json)?)?)))
}

/// # Safety
/// `s` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_scenario_free(s: *mut TdsncScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_run(s: *const TdsncScenario, mode: TdsncMode, out: *mut *mut TdsncReport) -> TdsncStatus {
    guard(|| {
        let mode = match mode {
            TdsncMode::Analyze => Mode::Analyze,
            TdsncMode::Simulate => Mode::Simulate,
            TdsncMode::Verify => Mode::Verify,
        };
        put(out, TdsncReport(run(&get(s)?.0, mode)?))
    })
}

/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_report_free(r: *mut TdsncReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// `*out` is 1 if every verdict passed, 0 if one failed, -1 outside verify mode.
///
/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_report_pass(r: *const TdsncReport, out: *mut i32) -> TdsncStatus {
    guard(|| write(out, get(r)?.0.pass.map_or(-1, i32::from)))
}

/// Report as JSON. Call with a NULL `buf` to learn the size through `needed`.
///
/// # Safety
/// `r` must be a live handle; `buf` NULL or `len` writable bytes; `needed` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_report_json(
    r: *const TdsncReport,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> TdsncStatus {
    guard(|| {
        let json = serde_json::to_string(&get(r)?.0).map_err(Fail::arg)?;
        copy_out(&json, buf, len, needed)
    })
}

/// Writes `report.json` and the per-property CSV files into `dir`.
///
/// # Safety
/// `r` must be a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tdsnc_report_write(r: *const TdsncReport, dir: *const c_char) -> TdsncStatus {
    guard(|| {
        let dir = c_str(dir)?;
        write_outputs(&get(r)?.0, Path::new(dir)).map_err(|e| Fail(TdsncStatus::Io, format!("{dir}: {e}")))
    })
}
