//! C ABI for the selx exploration engine.
//!
//! Models and sessions are opaque handles owned by the caller and released
//! with their `*_free` function. Every fallible call returns a
//! [`SelxStatus`]; on failure a message is available from
//! [`selx_last_error`] on the same thread. Strings returned through out
//! parameters are NUL-terminated UTF-8 and must be released with
//! [`selx_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use selx::egs::{self, CompileOptions, CompiledModel, EgsError, PropertyError};
use selx::explorer::{self, ExploreError, Init, Mode, Op, Session};
use selx::service::{render_trace, EnabledPayload, TraceResponse};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelxStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The model failed to parse, type-check or compile.
    ModelError = 3,
    /// The property names no assertion and does not parse or bind.
    PropertyError = 4,
    /// No counter-example (witness in witness mode) exists within the bound.
    PropertyHolds = 5,
    /// The operation found no alternative; the session is unchanged.
    NoAlternative = 6,
    /// Stepping backward from position 0.
    Boundary = 7,
    UnknownType = 8,
    /// The checker rejected the query (zero bound or malformed model).
    CheckError = 9,
    /// An enum argument was out of range.
    InvalidArgument = 10,
    /// An internal panic was caught at the boundary.
    Panic = 11,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelxMode {
    CounterExample = 0,
    Witness = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelxOp {
    Forward = 0,
    Backward = 1,
    AltState = 2,
    AltEvent = 3,
    /// Needs the type name argument of [`selx_session_apply`].
    SetType = 4,
}

/// A compiled model.
pub struct SelxModel {
    model: Arc<CompiledModel>,
}

/// An exploration session over a model.
pub struct SelxSession {
    model: Arc<CompiledModel>,
    session: Session,
}

struct LastError {
    message: CString,
    location: Option<(usize, usize)>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<LastError>> = const { RefCell::new(None) };
}

struct Failure {
    status: SelxStatus,
    message: String,
    location: Option<(usize, usize)>,
}

impl Failure {
    fn new(status: SelxStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
            location: None,
        }
    }
}

impl From<EgsError> for Failure {
    fn from(e: EgsError) -> Self {
        Self {
            status: SelxStatus::ModelError,
            message: e.to_string(),
            location: e.location(),
        }
    }
}

impl From<PropertyError> for Failure {
    fn from(e: PropertyError) -> Self {
        Self {
            status: SelxStatus::PropertyError,
            message: e.to_string(),
            location: e.location(),
        }
    }
}

impl From<ExploreError> for Failure {
    fn from(e: ExploreError) -> Self {
        let status = match &e {
            ExploreError::Boundary => SelxStatus::Boundary,
            ExploreError::NoAlternative => SelxStatus::NoAlternative,
            ExploreError::UnknownType(_) => SelxStatus::UnknownType,
            ExploreError::Check(_) => SelxStatus::CheckError,
        };
        Failure::new(status, e.to_string())
    }
}

fn set_last_error(message: &str, location: Option<(usize, usize)>) {
    let message = CString::new(message.replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|l| *l.borrow_mut() = Some(LastError { message, location }));
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SelxStatus {
    LAST_ERROR.with(|l| *l.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SelxStatus::Ok,
        Ok(Err(e)) => {
            set_last_error(&e.message, e.location);
            e.status
        }
        Err(panic) => {
            let text = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "internal panic".into());
            set_last_error(&text, None);
            SelxStatus::Panic
        }
    }
}

/// Borrows a NUL-terminated UTF-8 argument.
///
/// # Safety
/// `p` is null or points to a NUL-terminated string valid for `'a`.
unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(SelxStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::new(SelxStatus::InvalidUtf8, e.to_string()))
}

fn null(what: &str) -> Failure {
    Failure::new(SelxStatus::NullArgument, format!("null {what}"))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("JSON has no NUL bytes").into_raw()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn selx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null after a
/// successful call. Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn selx_last_error() -> *const c_char {
    LAST_ERROR.with(|l| l.borrow().as_ref().map_or(ptr::null(), |e| e.message.as_ptr()))
}

/// Source position of the last error, when it has one. Returns whether
/// `line` and `column` were written.
///
/// # Safety
/// `line` and `column` are null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn selx_last_error_location(line: *mut usize, column: *mut usize) -> bool {
    let Some((l, c)) = LAST_ERROR.with(|e| e.borrow().as_ref().and_then(|e| e.location)) else {
        return false;
    };
    if line.is_null() || column.is_null() {
        return false;
    }
    *line = l;
    *column = c;
    true
}

/// Parses and compiles model source. On success `*out` receives a model to
/// release with [`selx_model_free`].
///
/// # Safety
/// `source` is a NUL-terminated string; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn selx_model_compile(
    source: *const c_char,
    add_idle: bool,
    out: *mut *mut SelxModel,
) -> SelxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = ptr::null_mut();
        let sys = egs::parse_model(text(source)?)?;
        let opts = CompileOptions {
            add_idle,
            ..CompileOptions::default()
        };
        let model = Arc::new(egs::compile_lks(&sys, opts)?);
        *out = Box::into_raw(Box::new(SelxModel { model }));
        Ok(())
    })
}

/// Number of reachable states, or 0 for a null model.
///
/// # Safety
/// `model` is null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn selx_model_state_count(model: *const SelxModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.lks.num_states())
}

/// # Safety
/// `model` is null or a live model handle not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn selx_model_free(model: *mut SelxModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Checks `property` (an assertion name or a formula) up to `bound` in the
/// given [`SelxMode`] and opens a session on the first counter-example, or
/// witness in witness mode. Returns `PropertyHolds` with `*out` null when there is none.
///
/// # Safety
/// `model` is a live model handle, `property` a NUL-terminated string and
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn selx_session_create(
    model: *const SelxModel,
    property: *const c_char,
    bound: usize,
    mode: u32,
    out: *mut *mut SelxSession,
) -> SelxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = ptr::null_mut();
        let model = model.as_ref().ok_or_else(|| null("model"))?.model.clone();
        let phi = model.property(text(property)?)?;
        let mode = match mode {
            m if m == SelxMode::CounterExample as u32 => Mode::CounterExample,
            m if m == SelxMode::Witness as u32 => Mode::Witness,
            m => return Err(Failure::new(SelxStatus::InvalidArgument, format!("unknown mode {m}"))),
        };
        let lks = Arc::new(model.lks.clone());
        match explorer::init_session(lks, phi, bound, mode)? {
            Init::PropertyHolds(b) => Err(Failure::new(
                SelxStatus::PropertyHolds,
                format!("no counter-example within bound {b}"),
            )),
            Init::Session(s) => {
                *out = Box::into_raw(Box::new(SelxSession {
                    model,
                    session: *s,
                }));
                Ok(())
            }
        }
    })
}

/// # Safety
/// `session` is null or a live session handle not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn selx_session_free(session: *mut SelxSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// When `strict` is set, `SetType` also keeps the restriction recorded at
/// the focus.
///
/// # Safety
/// `session` is null or a live session handle.
#[no_mangle]
pub unsafe extern "C" fn selx_session_set_strict(session: *mut SelxSession, strict: bool) -> SelxStatus {
    guard(|| {
        let s = session.as_mut().ok_or_else(|| null("session"))?;
        s.session.set_strict_type_switch(strict);
        Ok(())
    })
}

/// Applies one [`SelxOp`]. `type_name` is read only for `SetType`.
///
/// # Safety
/// `session` is a live session handle; `type_name` is null or a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn selx_session_apply(
    session: *mut SelxSession,
    op: u32,
    type_name: *const c_char,
) -> SelxStatus {
    guard(|| {
        let s = session.as_mut().ok_or_else(|| null("session"))?;
        let op = match op {
            o if o == SelxOp::Forward as u32 => Op::Forward,
            o if o == SelxOp::Backward as u32 => Op::Backward,
            o if o == SelxOp::AltState as u32 => Op::AltState,
            o if o == SelxOp::AltEvent as u32 => Op::AltEvent,
            o if o == SelxOp::SetType as u32 => Op::SetType(text(type_name)?.to_string()),
            o => return Err(Failure::new(SelxStatus::InvalidArgument, format!("unknown op {o}"))),
        };
        s.session.apply(&op)?;
        Ok(())
    })
}

/// Current focus position, or 0 for a null session.
///
/// # Safety
/// `session` is null or a live session handle.
#[no_mangle]
pub unsafe extern "C" fn selx_session_focus(session: *const SelxSession) -> usize {
    session.as_ref().map_or(0, |s| s.session.focus())
}

/// Revision counter, or 0 for a null session.
///
/// # Safety
/// `session` is null or a live session handle.
#[no_mangle]
pub unsafe extern "C" fn selx_session_revision(session: *const SelxSession) -> u64 {
    session.as_ref().map_or(0, |s| s.session.revision())
}

/// Writes the current trace as JSON, in the same shape as the HTTP
/// `GET /sessions/{id}/trace` body.
///
/// # Safety
/// `session` is a live session handle; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn selx_session_trace_json(
    session: *const SelxSession,
    out: *mut *mut c_char,
) -> SelxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = ptr::null_mut();
        let s = session.as_ref().ok_or_else(|| null("session"))?;
        let body = TraceResponse {
            revision: s.session.revision(),
            trace: render_trace(&s.model, &s.session),
        };
        *out = to_c_string(serde_json::to_string(&body).expect("plain payload"));
        Ok(())
    })
}

/// Runs the enabled-types dry run at the focus and writes the result as
/// JSON, in the same shape as the HTTP `GET /sessions/{id}/enabled` body.
///
/// # Safety
/// `session` is a live session handle; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn selx_session_enabled_json(
    session: *const SelxSession,
    out: *mut *mut c_char,
) -> SelxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = ptr::null_mut();
        let s = session.as_ref().ok_or_else(|| null("session"))?;
        let results = s.session.enabled_types();
        let body = EnabledPayload::new(s.session.revision(), &results);
        *out = to_c_string(serde_json::to_string(&body).expect("plain payload"));
        Ok(())
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` is null or a string from this library not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn selx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
