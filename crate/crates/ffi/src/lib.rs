//! C interface to the farmtalk engine.
//!
//! Every function returns an [`FtStatus`]. On failure a message describing
//! the problem is kept per thread and can be read with
//! [`ft_last_error_message`]. Strings handed out by the library must be
//! released with [`ft_string_free`]; engines with [`ft_engine_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use farmtalk::cli::run::read_manifest;
use farmtalk::cli::{load_resources, BackendChoice, Resources, RunConfig};
use farmtalk::eval::{score, Mode};
use farmtalk::llm::run_llm_pipeline;
use farmtalk::ns::run_ns_pipeline;
use farmtalk::preprocess::preprocess_pipeline;
use farmtalk::record::GroundedRecord;
use farmtalk::timing::StageTimer;
use farmtalk::transcript::{parse_transcript, Domain};

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Config = 4,
    Transcript = 5,
    Unavailable = 6,
    Extraction = 7,
    Panic = 8,
}

/// Which extraction path to load or run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtBackend {
    Ns = 0,
    Llm = 1,
    Both = 2,
}

/// Scoring mode for [`ft_score`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtMode {
    Total = 0,
    Core = 1,
}

/// Opaque handle owning all loaded resources.
pub struct FtEngine {
    res: Resources,
}

struct Failure(FtStatus, String);

type FfiResult<T> = Result<T, Failure>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Runs `f`, turning errors and panics into a status plus stored message.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> FtStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FtStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal error: {msg}"));
            FtStatus::Panic
        }
    }
}

/// # Safety
/// `p` is null or a valid NUL-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Failure(FtStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure(FtStatus::InvalidUtf8, format!("{name}: {e}")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, name: &str) -> FfiResult<Option<&'a str>> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, name).map(Some)
    }
}

unsafe fn engine_arg<'a>(p: *const FtEngine) -> FfiResult<&'a FtEngine> {
    p.as_ref().ok_or_else(|| Failure(FtStatus::NullArgument, "engine is null".into()))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    let c = CString::new(s).map_err(|e| Failure(FtStatus::Extraction, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

fn to_json<T: serde::Serialize>(v: &T) -> FfiResult<String> {
    serde_json::to_string(v).map_err(|e| Failure(FtStatus::Extraction, e.to_string()))
}

/// Loads the resources named by a manifest for the given backends.
///
/// On success `*out` receives a new engine. On a configuration error every
/// problem is listed, one per line, in the last error message.
///
/// # Safety
/// `manifest_path` must be a NUL-terminated string and `out` a valid
/// pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ft_engine_new(manifest_path: *const c_char, backend: FtBackend, out: *mut *mut FtEngine) -> FtStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(FtStatus::NullArgument, "out is null".into()));
        }
        *out = ptr::null_mut();
        let path = PathBuf::from(str_arg(manifest_path, "manifest_path")?);
        let mut cfg = RunConfig::new(&path, PathBuf::new());
        cfg.backend = match backend {
            FtBackend::Ns => BackendChoice::Ns,
            FtBackend::Llm => BackendChoice::Llm,
            FtBackend::Both => BackendChoice::Both,
        };
        let m = read_manifest(&path).map_err(|d| Failure(FtStatus::Config, d.to_string()))?;
        let (res, diags) = load_resources(&m, &cfg);
        match res {
            Some(res) => {
                *out = Box::into_raw(Box::new(FtEngine { res }));
                Ok(())
            }
            None => {
                let msg = diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n");
                Err(Failure(FtStatus::Config, msg))
            }
        }
    })
}

/// Releases an engine. Null is ignored.
///
/// # Safety
/// `engine` is null or was returned by [`ft_engine_new`] and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ft_engine_free(engine: *mut FtEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Extracts grounded records from one transcript (JSON lines of
/// `{speaker, start, text}`), written to `*out_json` as a JSON array.
///
/// `domain` may be null to let the markers decide. `backend` must be
/// `FT_BACKEND_NS` or `FT_BACKEND_LLM` and must have been loaded.
///
/// # Safety
/// String arguments are NUL-terminated (or null where allowed); `engine`
/// comes from [`ft_engine_new`]; `out_json` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ft_extract(
    engine: *const FtEngine,
    transcript_jsonl: *const c_char,
    interview_id: *const c_char,
    domain: *const c_char,
    backend: FtBackend,
    out_json: *mut *mut c_char,
) -> FtStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(Failure(FtStatus::NullArgument, "out_json is null".into()));
        }
        *out_json = ptr::null_mut();
        let res = &engine_arg(engine)?.res;
        let doc = str_arg(transcript_jsonl, "transcript_jsonl")?;
        let id = str_arg(interview_id, "interview_id")?;
        let domain = opt_str_arg(domain, "domain")?
            .map(|d| d.parse::<Domain>().map_err(|e| Failure(FtStatus::InvalidArgument, e)))
            .transpose()?;
        let raw = parse_transcript(doc.as_bytes(), id, domain).map_err(|e| Failure(FtStatus::Transcript, e.to_string()))?;
        let (t, _) = preprocess_pipeline(&raw, &res.preprocess);
        let unavailable = |what: &str| Failure(FtStatus::Unavailable, format!("{what} backend was not loaded"));
        let records: Vec<GroundedRecord> = match backend {
            FtBackend::Ns => {
                let ns = res.ns.as_ref().ok_or_else(|| unavailable("ns"))?;
                let mut timer = StageTimer::default();
                run_ns_pipeline(&t, ns, &mut timer).map_err(|e| Failure(FtStatus::Extraction, e.to_string()))?.records
            }
            FtBackend::Llm => {
                let (Some(llm), Some(chat)) = (&res.llm, &res.chat) else { return Err(unavailable("llm")) };
                let o = run_llm_pipeline(&t, llm, chat.as_ref());
                if let Some(f) = o.failures.first() {
                    if o.records.is_empty() {
                        return Err(Failure(FtStatus::Extraction, format!("{} block(s) failed, first: {}", o.failures.len(), f.error)));
                    }
                }
                o.records
            }
            FtBackend::Both => return Err(Failure(FtStatus::InvalidArgument, "extract runs one backend at a time".into())),
        };
        write_string(out_json, to_json(&records)?)
    })
}

/// Scores a JSON array of records against the engine's gold records for
/// `interview_id`; `*out_json` receives precision, recall, F1 and counts.
///
/// # Safety
/// As for [`ft_extract`].
#[no_mangle]
pub unsafe extern "C" fn ft_score(
    engine: *const FtEngine,
    interview_id: *const c_char,
    records_json: *const c_char,
    mode: FtMode,
    out_json: *mut *mut c_char,
) -> FtStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(Failure(FtStatus::NullArgument, "out_json is null".into()));
        }
        *out_json = ptr::null_mut();
        let res = &engine_arg(engine)?.res;
        let id = str_arg(interview_id, "interview_id")?;
        let records: Vec<GroundedRecord> = serde_json::from_str(str_arg(records_json, "records_json")?)
            .map_err(|e| Failure(FtStatus::InvalidArgument, format!("records_json: {e}")))?;
        let gold = res.gold.as_ref().ok_or_else(|| Failure(FtStatus::Unavailable, "no gold records configured".into()))?;
        let mode = match mode {
            FtMode::Total => Mode::Total,
            FtMode::Core => Mode::Core,
        };
        write_string(out_json, to_json(&score(&records, gold.for_interview(id), mode))?)
    })
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn ft_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` is null or came from this library and has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ft_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ft_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
