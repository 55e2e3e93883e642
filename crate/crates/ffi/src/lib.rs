//! C ABI over the cogmg engine.
//!
//! Conventions:
//! - Every fallible function returns a [`CogmgStatus`]. On failure the
//!   message is available from [`cogmg_last_error_message`] on the same thread.
//! - Strings passed in are NUL-terminated UTF-8 and are only borrowed.
//! - Strings handed out through `char **out` parameters are owned by the
//!   caller and must be released with [`cogmg_string_free`].
//! - Structured results are JSON with the same field names as the HTTP API.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cogmg::engine::{Engine, EngineConfig};
use cogmg::kg::Triple;
use cogmg::queue::{AdminAction, Status, DEFAULT_ACTOR};
use cogmg::service::{ApiError, TraceBody};

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CogmgStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Config = 3,
    EmptyQuestion = 4,
    NotFound = 5,
    Conflict = 6,
    InvalidInput = 7,
    LlmFailure = 8,
    Unavailable = 9,
    Parse = 10,
    Panic = 11,
}

/// Opaque engine handle.
pub struct CogmgEngine {
    engine: Engine,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(CogmgStatus, String);

impl Fail {
    fn new(status: CogmgStatus, message: impl Into<String>) -> Self {
        Fail(status, message.into())
    }
}

impl From<ApiError> for Fail {
    fn from(e: ApiError) -> Self {
        let status = match (e.code, e.status) {
            ("empty_question", _) => CogmgStatus::EmptyQuestion,
            (_, 404) => CogmgStatus::NotFound,
            (_, 409) => CogmgStatus::Conflict,
            (_, 400 | 422) => CogmgStatus::InvalidInput,
            (_, 502) => CogmgStatus::LlmFailure,
            _ => CogmgStatus::Unavailable,
        };
        Fail(status, format!("{}: {}", e.code, e.message))
    }
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> CogmgStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            CogmgStatus::Ok
        }
        Ok(Err(Fail(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CogmgStatus::Panic
        }
    }
}

/// # Safety
/// `p` is null or a valid NUL-terminated string.
unsafe fn borrow_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::new(CogmgStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::new(CogmgStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

/// # Safety
/// `p` is null or a valid NUL-terminated string.
unsafe fn borrow_opt_str<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Fail> {
    if p.is_null() {
        Ok(None)
    } else {
        borrow_str(p, what).map(Some)
    }
}

/// # Safety
/// `engine` is null or a handle from [`cogmg_engine_new`].
unsafe fn borrow_engine<'a>(engine: *const CogmgEngine) -> Result<&'a Engine, Fail> {
    engine
        .as_ref()
        .map(|e| &e.engine)
        .ok_or_else(|| Fail::new(CogmgStatus::NullArgument, "engine is null"))
}

/// # Safety
/// `out` is null or valid for a pointer write.
unsafe fn hand_out(out: *mut *mut c_char, text: String) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::new(CogmgStatus::NullArgument, "output pointer is null"));
    }
    let c = CString::new(text).map_err(|_| Fail::new(CogmgStatus::InvalidInput, "result contains NUL"))?;
    *out = c.into_raw();
    Ok(())
}

macro_rules! to_json {
    ($value:expr) => {
        serde_json::to_string($value).expect("value serializes")
    };
}

/// Creates an engine. `config_toml` may be null for the shipped fixtures
/// and scripts; otherwise it uses the keys `kg`, `corpus`, `corpus_cache`,
/// `script`, `log`, `trace_spill`, `clock` and a `[remote]` table.
///
/// # Safety
/// `config_toml` is null or a valid string; `out` is valid for a write.
#[no_mangle]
pub unsafe extern "C" fn cogmg_engine_new(config_toml: *const c_char, out: *mut *mut CogmgEngine) -> CogmgStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::new(CogmgStatus::NullArgument, "output pointer is null"));
        }
        *out = ptr::null_mut();
        let config = match borrow_opt_str(config_toml, "config")? {
            Some(text) => EngineConfig::from_toml_str(text).map_err(|e| Fail::new(CogmgStatus::Config, e.to_string()))?,
            None => EngineConfig::default(),
        };
        let engine = Engine::open(&config).map_err(|e| Fail::new(CogmgStatus::Config, e.to_string()))?;
        *out = Box::into_raw(Box::new(CogmgEngine { engine }));
        Ok(())
    })
}

/// Destroys an engine. Null is ignored.
///
/// # Safety
/// `engine` is null or a handle from [`cogmg_engine_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cogmg_engine_free(engine: *mut CogmgEngine) {
    if !engine.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(engine))));
    }
}

/// Answers a question; `*out_json` receives the trace.
///
/// # Safety
/// Pointer arguments follow the module conventions.
#[no_mangle]
pub unsafe extern "C" fn cogmg_ask(engine: *const CogmgEngine, question: *const c_char, out_json: *mut *mut c_char) -> CogmgStatus {
    guard(|| {
        let engine = borrow_engine(engine)?;
        let question = borrow_str(question, "question")?;
        let trace = engine.ask(question).map_err(|e| Fail::from(ApiError::from(e)))?;
        hand_out(out_json, to_json!(&TraceBody::from(&trace)))
    })
}

/// Fetches a stored trace by id.
///
/// # Safety
/// Pointer arguments follow the module conventions.
#[no_mangle]
pub unsafe extern "C" fn cogmg_trace_get(engine: *const CogmgEngine, id: *const c_char, out_json: *mut *mut c_char) -> CogmgStatus {
    guard(|| {
        let engine = borrow_engine(engine)?;
        let id = borrow_str(id, "id")?;
        let trace = engine.trace(id).ok_or_else(|| Fail::new(CogmgStatus::NotFound, format!("no trace {id}")))?;
        hand_out(out_json, to_json!(&TraceBody::from(&trace)))
    })
}

/// Lists pending records, newest first. `status` may be null for all.
///
/// # Safety
/// Pointer arguments follow the module conventions.
#[no_mangle]
pub unsafe extern "C" fn cogmg_pending_list(engine: *const CogmgEngine, status: *const c_char, out_json: *mut *mut c_char) -> CogmgStatus {
    guard(|| {
        let engine = borrow_engine(engine)?;
        let status = match borrow_opt_str(status, "status")? {
            None | Some("all") => None,
            Some(s) => Some(s.parse::<Status>().map_err(|e| Fail::new(CogmgStatus::InvalidInput, e))?),
        };
        hand_out(out_json, to_json!(&serde_json::json!({ "records": engine.pending(status) })))
    })
}

/// Fetches one pending record.
///
/// # Safety
/// Pointer arguments follow the module conventions.
#[no_mangle]
pub unsafe extern "C" fn cogmg_pending_get(engine: *const CogmgEngine, id: *const c_char, out_json: *mut *mut c_char) -> CogmgStatus {
    guard(|| {
        let engine = borrow_engine(engine)?;
        let id = borrow_str(id, "id")?;
        let rec = engine.pending_record(id).map_err(|e| Fail::from(ApiError::from(e)))?;
        hand_out(out_json, to_json!(&rec))
    })
}

/// Applies `action` ("accept", "verify", "edit" or "reject") to a record.
/// `body_json` may be null except for edit, which needs `{"triples": [...]}`;
/// any body may carry `"actor"`. `*out_json` receives the updated record.
///
/// # Safety
/// Pointer arguments follow the module conventions.
#[no_mangle]
pub unsafe extern "C" fn cogmg_pending_action(
    engine: *const CogmgEngine,
    id: *const c_char,
    action: *const c_char,
    body_json: *const c_char,
    out_json: *mut *mut c_char,
) -> CogmgStatus {
    guard(|| {
        let engine = borrow_engine(engine)?;
        let id = borrow_str(id, "id")?;
        let action = borrow_str(action, "action")?;
        let body: serde_json::Value = match borrow_opt_str(body_json, "body")? {
            Some(text) => serde_json::from_str(text).map_err(|e| Fail::new(CogmgStatus::InvalidInput, e.to_string()))?,
            None => serde_json::json!({}),
        };
        let actor = body.get("actor").and_then(|a| a.as_str()).unwrap_or(DEFAULT_ACTOR).to_string();
        let action = match action {
            "accept" => AdminAction::AcceptDirect,
            "verify" => AdminAction::Verify,
            "reject" => AdminAction::Reject,
            "edit" => {
                let triples: Vec<Triple> = serde_json::from_value(body.get("triples").cloned().unwrap_or_default())
                    .map_err(|e| Fail::new(CogmgStatus::InvalidInput, format!("triples: {e}")))?;
                AdminAction::Edit(triples)
            }
            other => return Err(Fail::new(CogmgStatus::InvalidInput, format!("unknown action {other:?}"))),
        };
        let rec = engine.pending_action(id, action, &actor).map_err(|e| Fail::from(ApiError::from(e)))?;
        hand_out(out_json, to_json!(&rec))
    })
}

/// Graph counts as `{"entities","edges","attributes"}`.
///
/// # Safety
/// Pointer arguments follow the module conventions.
#[no_mangle]
pub unsafe extern "C" fn cogmg_kg_stats(engine: *const CogmgEngine, out_json: *mut *mut c_char) -> CogmgStatus {
    guard(|| {
        let engine = borrow_engine(engine)?;
        hand_out(out_json, to_json!(&engine.kg_stats()))
    })
}

/// Adds a complete triple written `(s; p; o)`. `*out_outcome` (nullable)
/// receives "added_edge", "added_attribute" or "already_present".
///
/// # Safety
/// Pointer arguments follow the module conventions.
#[no_mangle]
pub unsafe extern "C" fn cogmg_kg_add(engine: *const CogmgEngine, triple: *const c_char, out_outcome: *mut *mut c_char) -> CogmgStatus {
    guard(|| {
        let engine = borrow_engine(engine)?;
        let text = borrow_str(triple, "triple")?;
        let triple = Triple::parse(text).map_err(|e| Fail::new(CogmgStatus::Parse, e.to_string()))?;
        let outcome = engine.kg_add(&triple).map_err(|e| Fail::new(CogmgStatus::InvalidInput, e.to_string()))?;
        if out_outcome.is_null() {
            return Ok(());
        }
        let word = serde_json::to_value(outcome).expect("outcome serializes");
        hand_out(out_outcome, word.as_str().unwrap_or_default().to_string())
    })
}

/// Removes everything matching a pattern such as `(France; capital; ?)`.
///
/// # Safety
/// Pointer arguments follow the module conventions; `out_removed` may be null.
#[no_mangle]
pub unsafe extern "C" fn cogmg_kg_remove(engine: *const CogmgEngine, pattern: *const c_char, out_removed: *mut usize) -> CogmgStatus {
    guard(|| {
        let engine = borrow_engine(engine)?;
        let text = borrow_str(pattern, "pattern")?;
        let pattern = Triple::parse(text).map_err(|e| Fail::new(CogmgStatus::Parse, e.to_string()))?;
        let removed = engine.kg_remove(&pattern);
        if !out_removed.is_null() {
            *out_removed = removed;
        }
        Ok(())
    })
}

/// Parses and runs a KoPL program. A program that fails at run time yields
/// `Ok` with the answer "Failed"; a program that does not parse yields
/// [`CogmgStatus::Parse`].
///
/// # Safety
/// Pointer arguments follow the module conventions.
#[no_mangle]
pub unsafe extern "C" fn cogmg_kopl_execute(engine: *const CogmgEngine, program: *const c_char, out_answer: *mut *mut c_char) -> CogmgStatus {
    guard(|| {
        let engine = borrow_engine(engine)?;
        let program = borrow_str(program, "program")?;
        let result = engine.kopl(program).map_err(|e| Fail::new(CogmgStatus::Parse, e.to_string()))?;
        hand_out(out_answer, result.observation().to_string())
    })
}

/// Message for the last call on this thread; empty after a success. The
/// pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cogmg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string handed out by this library. Null is ignored.
///
/// # Safety
/// `s` is null or came from an `out` parameter of this library and was not
/// freed before.
#[no_mangle]
pub unsafe extern "C" fn cogmg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn cogmg_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
