//! C ABI for the satlens simulator.
//!
//! Every function returns a [`SatlensStatus`]; results travel through out
//! pointers. On failure, `satlens_last_error_message` copies a description
//! of the most recent error on the calling thread. Handles are opaque and
//! must be released with their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use satlens::chain::{
    add_ground_links, build_entanglement_chain, build_qubit_chain, run_chain_with, ChainSpec, ChainTrace,
    GroundLinkSide, RunOptions,
};
use satlens::scenario::Scenario;
use satlens::turbulence::{fried_parameter, TurbulenceProfile};
use satlens::SimError;

/// Outcome of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatlensStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The beam outgrew the simulation grid.
    GuardBand = 3,
    /// A scenario document was malformed or out of range.
    Config = 4,
    OutOfRange = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// Relay chain description.
pub struct SatlensChain(ChainSpec);

/// Per-element transmission record of one run.
pub struct SatlensTrace(ChainTrace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(SatlensStatus, String);

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let status = if e.is_guard_band() { SatlensStatus::GuardBand } else { SatlensStatus::InvalidArgument };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(SatlensStatus::NullPointer, format!("{name} is null"))
}

/// Runs `body`, recording any error or panic for `satlens_last_error_message`.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> SatlensStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => SatlensStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {message}"));
            SatlensStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, name: &str, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn chain_ref<'a>(chain: *const SatlensChain) -> Result<&'a ChainSpec, Failure> {
    chain.as_ref().map(|c| &c.0).ok_or_else(|| null("chain"))
}

unsafe fn trace_ref<'a>(trace: *const SatlensTrace) -> Result<&'a ChainTrace, Failure> {
    trace.as_ref().map(|t| &t.0).ok_or_else(|| null("trace"))
}

fn boxed_chain(chain: ChainSpec) -> *mut SatlensChain {
    Box::into_raw(Box::new(SatlensChain(chain)))
}

/// Copies the last error message on this thread into `buffer` as a
/// NUL-terminated string, truncating to `capacity` bytes. Returns the
/// full message length excluding the terminator, or 0 if there is none.
///
/// # Safety
/// `buffer` must be null or valid for `capacity` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn satlens_last_error_message(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buffer.is_null() && capacity > 0 {
            let n = bytes.len().min(capacity - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buffer, n);
            *buffer.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn satlens_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Entanglement relay chain: lenses of diameter `d` every `l0` metres
/// with focal lengths `l0, l0/2, l0/2, …`.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn satlens_chain_entanglement(
    d: f64,
    l0: f64,
    total_distance: f64,
    wavelength: f64,
    out: *mut *mut SatlensChain,
) -> SatlensStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let chain = build_entanglement_chain(d, l0, total_distance, wavelength)?;
        write(out, "out", boxed_chain(chain))
    })
}

/// Qubit relay chain that first focuses a flat wavefront to an Airy spot
/// at least `margin` times the matched waist.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn satlens_chain_qubit(
    d: f64,
    l0: f64,
    total_distance: f64,
    margin: f64,
    wavelength: f64,
    out: *mut *mut SatlensChain,
) -> SatlensStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let chain = build_qubit_chain(d, l0, total_distance, margin, wavelength)?;
        write(out, "out", boxed_chain(chain))
    })
}

/// Appends a downlink of length `l_sg` onto a ground disk of `d_ground`.
///
/// # Safety
/// `chain` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn satlens_chain_add_downlink(chain: *mut SatlensChain, l_sg: f64, d_ground: f64) -> SatlensStatus {
    guard(|| {
        let c = chain.as_mut().ok_or_else(|| null("chain"))?;
        c.0 = add_ground_links(&c.0, l_sg, d_ground, GroundLinkSide::DownlinkOnly)?;
        Ok(())
    })
}

/// Number of relay satellites in the chain.
///
/// # Safety
/// `chain` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn satlens_chain_relay_count(chain: *const SatlensChain, out: *mut usize) -> SatlensStatus {
    guard(|| write(out, "out", chain_ref(chain)?.relay_count()))
}

/// Releases a chain. Null is ignored.
///
/// # Safety
/// `chain` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn satlens_chain_free(chain: *mut SatlensChain) {
    if !chain.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(chain))));
    }
}

/// Propagates the chain's matched Gaussian through it on an `n`×`n` grid
/// whose side is `oversize` times the widest optic.
///
/// # Safety
/// `chain` must be a live handle; `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn satlens_chain_run_gaussian(
    chain: *const SatlensChain,
    n: usize,
    oversize: f64,
    out: *mut *mut SatlensTrace,
) -> SatlensStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let source = c.gaussian_source(c.grid(n, oversize)?)?;
        let trace = run_chain_with(&source, c, &RunOptions { oversize, ..RunOptions::default() })?;
        write(out, "out", Box::into_raw(Box::new(SatlensTrace(trace))))
    })
}

/// Number of recorded elements.
///
/// # Safety
/// `trace` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn satlens_trace_len(trace: *const SatlensTrace, out: *mut usize) -> SatlensStatus {
    guard(|| write(out, "out", trace_ref(trace)?.points.len()))
}

/// Distance (m), cumulative transmission and its natural log after
/// element `index`. Any out pointer may be null to skip it.
///
/// # Safety
/// `trace` must be a live handle; non-null outs valid for one write.
#[no_mangle]
pub unsafe extern "C" fn satlens_trace_point(
    trace: *const SatlensTrace,
    index: usize,
    distance: *mut f64,
    transmission: *mut f64,
    log_transmission: *mut f64,
) -> SatlensStatus {
    guard(|| {
        let t = trace_ref(trace)?;
        let p = t.points.get(index).ok_or_else(|| {
            Failure(SatlensStatus::OutOfRange, format!("index {index} outside trace of {}", t.points.len()))
        })?;
        for (dst, v) in [(distance, p.distance), (transmission, p.transmission), (log_transmission, p.log_transmission)] {
            if !dst.is_null() {
                dst.write(v);
            }
        }
        Ok(())
    })
}

/// End-to-end transmission of the run.
///
/// # Safety
/// `trace` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn satlens_trace_final_transmission(trace: *const SatlensTrace, out: *mut f64) -> SatlensStatus {
    guard(|| write(out, "out", trace_ref(trace)?.final_transmission()))
}

/// Releases a trace. Null is ignored.
///
/// # Safety
/// `trace` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn satlens_trace_free(trace: *mut SatlensTrace) {
    if !trace.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(trace))));
    }
}

/// Fried parameter (m) of a slant path of length `path` through a
/// Hufnagel-Valley atmosphere with ground term `a` and wind `wind` (m/s).
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn satlens_fried_parameter(
    path: f64,
    wavelength: f64,
    a: f64,
    wind: f64,
    out: *mut f64,
) -> SatlensStatus {
    guard(|| {
        if !(path > 0.0 && wavelength > 0.0) {
            return Err(Failure(SatlensStatus::InvalidArgument, "path and wavelength must be > 0".into()));
        }
        let profile = TurbulenceProfile { a, wind, ..TurbulenceProfile::default() };
        profile.validate()?;
        write(out, "out", fried_parameter(path, wavelength, &profile))
    })
}

/// Runs a scenario given as TOML text and reports its total loss budget
/// in dB.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `total_db` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn satlens_scenario_total_db(toml: *const c_char, total_db: *mut f64) -> SatlensStatus {
    guard(|| {
        if toml.is_null() {
            return Err(null("toml"));
        }
        let text = CStr::from_ptr(toml)
            .to_str()
            .map_err(|e| Failure(SatlensStatus::Config, format!("scenario is not UTF-8: {e}")))?;
        let scenario = Scenario::from_toml(text).map_err(|e| Failure(SatlensStatus::Config, e.to_string()))?;
        let report = scenario.run()?;
        write(total_db, "total_db", satlens::loss::total_budget(&report.budget)?)
    })
}
