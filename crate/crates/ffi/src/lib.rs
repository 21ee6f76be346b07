//! C interface to the tessla engine.
//!
//! Specifications and monitors are opaque handles. Every fallible call
//! returns a [`TesslaStatus`]; the message of the most recent failure on
//! the calling thread is available from [`tessla_last_error`]. Strings
//! returned through `char **` out-parameters are owned by the caller and
//! must be released with [`tessla_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tessla::engine::session::{Session, SessionError};
use tessla::engine::{EngineError, Limits, DEFAULT_MAX_EVENTS};
use tessla::frontend::compile;
use tessla::CoreSpec;

/// Result of a call. The numeric values match the exit codes of the
/// `tessla` command line tool where both exist.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TesslaStatus {
    Ok = 0,
    SpecError = 1,
    TraceError = 2,
    RuntimeError = 3,
    NullArgument = 10,
    InvalidUtf8 = 11,
    /// The monitor was already finished or stopped at the event limit.
    Finished = 12,
    Panic = 13,
}

/// A compiled specification.
pub struct TesslaSpec {
    spec: CoreSpec,
}

/// An incremental monitor reading trace text.
pub struct TesslaMonitor {
    session: Session,
    /// Text after the last newline seen so far.
    partial: String,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl ToString) {
    let msg = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("nul bytes removed")));
}

fn fail(status: TesslaStatus, msg: impl ToString) -> TesslaStatus {
    set_error(msg);
    status
}

fn engine_status(e: &EngineError) -> TesslaStatus {
    match e {
        EngineError::Spec(_) | EngineError::NotWellFormed(_) => TesslaStatus::SpecError,
        EngineError::NonMonotonicChunk { .. }
        | EngineError::UnknownInput(_)
        | EngineError::InputTypeMismatch { .. } => TesslaStatus::TraceError,
        EngineError::NonPositiveDelay { .. } | EngineError::EventLimitExceeded { .. } => TesslaStatus::RuntimeError,
    }
}

fn session_status(e: &SessionError) -> TesslaStatus {
    match e {
        SessionError::Trace(_) => TesslaStatus::TraceError,
        SessionError::Engine(e) => engine_status(e),
        SessionError::Finished => TesslaStatus::Finished,
    }
}

fn limits(max_events: u64) -> Limits {
    let max_events = if max_events == 0 { DEFAULT_MAX_EVENTS } else { max_events as usize };
    Limits { max_events }
}

/// Runs `body`, converting panics into `Panic`. Clears the last error first.
fn guarded(body: impl FnOnce() -> TesslaStatus) -> TesslaStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(TesslaStatus::Panic, format!("internal error: {msg}"))
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, TesslaStatus> {
    if s.is_null() {
        return Err(fail(TesslaStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|e| fail(TesslaStatus::InvalidUtf8, e))
}

fn into_c(text: String) -> *mut c_char {
    CString::new(text.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

/// Compiles specification source text. On success `*out` receives a handle
/// to release with `tessla_spec_free`.
///
/// # Safety
/// `source` must be a valid nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tessla_spec_compile(source: *const c_char, out: *mut *mut TesslaSpec) -> TesslaStatus {
    guarded(|| {
        if out.is_null() {
            return fail(TesslaStatus::NullArgument, "null output pointer");
        }
        *out = ptr::null_mut();
        let source = match read_str(source) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match compile(source) {
            Ok(spec) => {
                *out = Box::into_raw(Box::new(TesslaSpec { spec }));
                TesslaStatus::Ok
            }
            Err(e) => fail(TesslaStatus::SpecError, e),
        }
    })
}

/// # Safety
/// `spec` must be null or a handle from `tessla_spec_compile` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tessla_spec_free(spec: *mut TesslaSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Number of declared inputs, or 0 for a null handle.
///
/// # Safety
/// `spec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tessla_spec_input_count(spec: *const TesslaSpec) -> usize {
    spec.as_ref().map_or(0, |s| s.spec.inputs.len())
}

/// Number of outputs, or 0 for a null handle.
///
/// # Safety
/// `spec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tessla_spec_output_count(spec: *const TesslaSpec) -> usize {
    spec.as_ref().map_or(0, |s| s.spec.outputs.len())
}

/// The flattened core form of the specification as text.
///
/// # Safety
/// `spec` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tessla_spec_flatten(spec: *const TesslaSpec, out: *mut *mut c_char) -> TesslaStatus {
    guarded(|| {
        let (Some(spec), false) = (spec.as_ref(), out.is_null()) else {
            return fail(TesslaStatus::NullArgument, "null argument");
        };
        *out = into_c(spec.spec.flatten().to_string());
        TesslaStatus::Ok
    })
}

/// Creates a monitor. `max_events` bounds the generated timestamps; 0
/// selects the default.
///
/// # Safety
/// `spec` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tessla_monitor_new(
    spec: *const TesslaSpec,
    max_events: u64,
    out: *mut *mut TesslaMonitor,
) -> TesslaStatus {
    guarded(|| {
        let (Some(spec), false) = (spec.as_ref(), out.is_null()) else {
            return fail(TesslaStatus::NullArgument, "null argument");
        };
        *out = ptr::null_mut();
        match Session::new(&spec.spec, limits(max_events)) {
            Ok(session) => {
                *out = Box::into_raw(Box::new(TesslaMonitor { session, partial: String::new() }));
                TesslaStatus::Ok
            }
            Err(e) => fail(engine_status(&e), e),
        }
    })
}

/// # Safety
/// `monitor` must be null or a handle from `tessla_monitor_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tessla_monitor_free(monitor: *mut TesslaMonitor) {
    if !monitor.is_null() {
        drop(Box::from_raw(monitor));
    }
}

/// Feeds trace text. Text may end in the middle of a line; the rest is kept
/// for the next call. `*out` receives the output lines that became final,
/// also when an error is returned.
///
/// # Safety
/// `monitor` must be a live handle, `text` a nul-terminated string and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tessla_monitor_feed(
    monitor: *mut TesslaMonitor,
    text: *const c_char,
    out: *mut *mut c_char,
) -> TesslaStatus {
    guarded(|| {
        let (Some(m), false) = (monitor.as_mut(), out.is_null()) else {
            return fail(TesslaStatus::NullArgument, "null argument");
        };
        *out = ptr::null_mut();
        let text = match read_str(text) {
            Ok(s) => s,
            Err(s) => return s,
        };
        m.partial.push_str(text);
        let mut produced = String::new();
        let mut status = TesslaStatus::Ok;
        while let Some(i) = m.partial.find('\n') {
            let line: String = m.partial.drain(..=i).collect();
            if let Err(e) = m.session.feed_line(line.trim_end_matches(['\n', '\r']), &mut produced) {
                m.partial.clear();
                status = fail(session_status(&e), e);
                break;
            }
        }
        *out = into_c(produced);
        status
    })
}

/// Ends the input: processes a trailing unterminated line and writes the
/// remaining output together with the final progress directive.
///
/// # Safety
/// Same as `tessla_monitor_feed`.
#[no_mangle]
pub unsafe extern "C" fn tessla_monitor_finish(monitor: *mut TesslaMonitor, out: *mut *mut c_char) -> TesslaStatus {
    guarded(|| {
        let (Some(m), false) = (monitor.as_mut(), out.is_null()) else {
            return fail(TesslaStatus::NullArgument, "null argument");
        };
        let mut produced = String::new();
        let rest = std::mem::take(&mut m.partial);
        let mut result = Ok(());
        if !rest.is_empty() {
            result = m.session.feed_line(rest.trim_end_matches('\r'), &mut produced);
        }
        if result.is_ok() {
            result = m.session.finish(&mut produced);
        }
        *out = into_c(produced);
        match result {
            Ok(()) => TesslaStatus::Ok,
            Err(e) => fail(session_status(&e), e),
        }
    })
}

/// Evaluates a whole trace at once. `*out` receives the output trace, or
/// the part produced before an error.
///
/// # Safety
/// `spec` must be a live handle, `trace` a nul-terminated string and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tessla_run(
    spec: *const TesslaSpec,
    trace: *const c_char,
    max_events: u64,
    out: *mut *mut c_char,
) -> TesslaStatus {
    let mut monitor = ptr::null_mut();
    let status = tessla_monitor_new(spec, max_events, &mut monitor);
    if status != TesslaStatus::Ok {
        return status;
    }
    let mut fed = ptr::null_mut();
    let mut status = tessla_monitor_feed(monitor, trace, &mut fed);
    if status == TesslaStatus::Ok {
        let mut rest = ptr::null_mut();
        status = tessla_monitor_finish(monitor, &mut rest);
        fed = concat(fed, rest);
    }
    // Keep the error message of the failing step across the cleanup call.
    tessla_monitor_free(monitor);
    if !out.is_null() {
        *out = fed;
    } else {
        tessla_string_free(fed);
    }
    status
}

unsafe fn concat(a: *mut c_char, b: *mut c_char) -> *mut c_char {
    if a.is_null() {
        return b;
    }
    if b.is_null() {
        return a;
    }
    let joined = [CStr::from_ptr(a).to_bytes(), CStr::from_ptr(b).to_bytes()].concat();
    tessla_string_free(a);
    tessla_string_free(b);
    CString::new(joined).expect("joined from C strings").into_raw()
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tessla_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn tessla_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn tessla_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
