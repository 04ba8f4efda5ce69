//! C ABI over the noveltyforge core.
//!
//! Models and batches cross the boundary as opaque handles; everything else
//! is UTF-8 text or JSON. Every fallible call returns an [`NfStatus`] and
//! writes its result through an out pointer. On failure the out pointer is
//! left untouched and [`nf_last_error_message`] describes the problem.
//!
//! Strings returned through `char **` are owned by the caller and must be
//! released with [`nf_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use noveltyforge::filter::{self, FilterConfig, Level, ViabilityThresholds};
use noveltyforge::transform::{generate_batch, Batch, GeneratorConfig};
use noveltyforge::tsal::{self, DomainModel, ParseError, ProblemModel};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Input text was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Model text did not parse.
    SyntaxError = 3,
    /// Model text parsed but failed validation.
    ValidationFailed = 4,
    /// A JSON configuration was malformed or out of range.
    ConfigError = 5,
    /// Generation or simulation failed.
    RuntimeError = 6,
    /// An index was past the end.
    OutOfRange = 7,
    /// The library panicked; this is a bug.
    Panic = 8,
}

/// Viability level of a performance delta.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfLevel {
    None = 0,
    Low = 1,
    Medium = 2,
    High = 3,
}

impl From<Level> for NfLevel {
    fn from(l: Level) -> Self {
        match l {
            Level::None => NfLevel::None,
            Level::Low => NfLevel::Low,
            Level::Medium => NfLevel::Medium,
            Level::High => NfLevel::High,
        }
    }
}

/// A parsed, validated domain.
pub struct NfDomain {
    model: DomainModel,
}

/// A parsed, validated problem. Independent of the domain handle it was
/// parsed against.
pub struct NfProblem {
    model: ProblemModel,
}

/// A generated batch of novelty records.
pub struct NfBatch {
    batch: Batch,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(NfStatus, String);

type Outcome<T> = Result<T, Failure>;

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `body`, recording any failure or panic for [`nf_last_error_message`].
fn guard(body: impl FnOnce() -> Outcome<()>) -> NfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NfStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            NfStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(NfStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Outcome<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(NfStatus::InvalidUtf8, format!("`{what}`: {e}")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Outcome<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

fn out<T>(p: *mut T, what: &str) -> Outcome<*mut T> {
    if p.is_null() {
        Err(null(what))
    } else {
        Ok(p)
    }
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("nul bytes removed")
        .into_raw()
}

fn parse_failure(e: ParseError) -> Failure {
    let status = match e {
        ParseError::Syntax(_) => NfStatus::SyntaxError,
        ParseError::Semantic(_) => NfStatus::ValidationFailed,
    };
    Failure(status, format!("{}: {e}", e.code()))
}

/// Optional JSON config: null or empty means defaults.
unsafe fn config<T: serde::de::DeserializeOwned + Default>(p: *const c_char, what: &str) -> Outcome<T> {
    if p.is_null() {
        return Ok(T::default());
    }
    let s = text(p, what)?;
    if s.trim().is_empty() {
        return Ok(T::default());
    }
    serde_json::from_str(s).map_err(|e| Failure(NfStatus::ConfigError, format!("`{what}`: {e}")))
}

/// Message for the last failed call on this thread, or null after a
/// successful one. Valid until the next call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn nf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn nf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn nf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates domain text.
///
/// # Safety
/// `source` must be a nul-terminated string; `out_domain` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nf_domain_parse(source: *const c_char, out_domain: *mut *mut NfDomain) -> NfStatus {
    guard(|| {
        let dst = out(out_domain, "out_domain")?;
        let model = tsal::parse_domain(text(source, "source")?).map_err(parse_failure)?;
        *dst = Box::into_raw(Box::new(NfDomain { model }));
        Ok(())
    })
}

/// Canonical text of a domain.
///
/// # Safety
/// `domain` must be a live handle; `out_text` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nf_domain_print(domain: *const NfDomain, out_text: *mut *mut c_char) -> NfStatus {
    guard(|| {
        let dst = out(out_text, "out_text")?;
        *dst = to_c(tsal::print_domain(&handle(domain, "domain")?.model));
        Ok(())
    })
}

/// Releases a domain handle. Null is ignored.
///
/// # Safety
/// `domain` must come from [`nf_domain_parse`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn nf_domain_free(domain: *mut NfDomain) {
    if !domain.is_null() {
        drop(Box::from_raw(domain));
    }
}

/// Parses and validates problem text against `domain`.
///
/// # Safety
/// `domain` must be a live handle, `source` nul-terminated, `out_problem`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn nf_problem_parse(
    domain: *const NfDomain,
    source: *const c_char,
    out_problem: *mut *mut NfProblem,
) -> NfStatus {
    guard(|| {
        let dst = out(out_problem, "out_problem")?;
        let d = handle(domain, "domain")?;
        let model = tsal::parse_problem(text(source, "source")?, &d.model).map_err(parse_failure)?;
        *dst = Box::into_raw(Box::new(NfProblem { model }));
        Ok(())
    })
}

/// Canonical text of a problem.
///
/// # Safety
/// `problem` must be a live handle; `out_text` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nf_problem_print(problem: *const NfProblem, out_text: *mut *mut c_char) -> NfStatus {
    guard(|| {
        let dst = out(out_text, "out_text")?;
        *dst = to_c(tsal::print_problem(&handle(problem, "problem")?.model));
        Ok(())
    })
}

/// Releases a problem handle. Null is ignored.
///
/// # Safety
/// `problem` must come from [`nf_problem_parse`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn nf_problem_free(problem: *mut NfProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Generates a batch of novelties. `config_json` is a generator config
/// object (null or empty for defaults).
///
/// # Safety
/// Handles must be live; `config_json` null or nul-terminated; `out_batch`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn nf_generate_batch(
    domain: *const NfDomain,
    problem: *const NfProblem,
    config_json: *const c_char,
    out_batch: *mut *mut NfBatch,
) -> NfStatus {
    guard(|| {
        let dst = out(out_batch, "out_batch")?;
        let d = handle(domain, "domain")?;
        let p = handle(problem, "problem")?;
        let cfg: GeneratorConfig = config(config_json, "config_json")?;
        let batch = generate_batch(&d.model, &p.model, &cfg).map_err(|e| {
            let status = if e.code() == "CONFIG_ERROR" {
                NfStatus::ConfigError
            } else {
                NfStatus::RuntimeError
            };
            Failure(status, format!("{}: {e}", e.code()))
        })?;
        *dst = Box::into_raw(Box::new(NfBatch { batch }));
        Ok(())
    })
}

/// Number of records in a batch, or 0 for null.
///
/// # Safety
/// `batch` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nf_batch_len(batch: *const NfBatch) -> usize {
    batch.as_ref().map_or(0, |b| b.batch.records.len())
}

/// JSON of record `index`.
///
/// # Safety
/// `batch` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nf_batch_record_json(
    batch: *const NfBatch,
    index: usize,
    out_json: *mut *mut c_char,
) -> NfStatus {
    guard(|| {
        let dst = out(out_json, "out_json")?;
        let b = handle(batch, "batch")?;
        let r = b.batch.records.get(index).ok_or_else(|| {
            Failure(
                NfStatus::OutOfRange,
                format!("index {index} out of range for {} records", b.batch.records.len()),
            )
        })?;
        *dst = to_c(serde_json::to_string(r).expect("records serialize"));
        Ok(())
    })
}

/// Releases a batch handle. Null is ignored.
///
/// # Safety
/// `batch` must come from [`nf_generate_batch`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn nf_batch_free(batch: *mut NfBatch) {
    if !batch.is_null() {
        drop(Box::from_raw(batch));
    }
}

/// Scores a novel model pair against its base and writes the viability
/// report as JSON. `config_json` is a filter config object (null or empty
/// for defaults).
///
/// # Safety
/// Handles must be live; `config_json` null or nul-terminated; `out_json`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn nf_filter(
    base_domain: *const NfDomain,
    base_problem: *const NfProblem,
    novel_domain: *const NfDomain,
    novel_problem: *const NfProblem,
    config_json: *const c_char,
    out_json: *mut *mut c_char,
) -> NfStatus {
    guard(|| {
        let dst = out(out_json, "out_json")?;
        let bd = handle(base_domain, "base_domain")?;
        let bp = handle(base_problem, "base_problem")?;
        let nd = handle(novel_domain, "novel_domain")?;
        let np = handle(novel_problem, "novel_problem")?;
        let cfg: FilterConfig = config(config_json, "config_json")?;
        let report = filter::evaluate((&bd.model, &bp.model), (&nd.model, &np.model), &cfg).map_err(|e| {
            let status = if e.code() == "CONFIG_ERROR" {
                NfStatus::ConfigError
            } else {
                NfStatus::RuntimeError
            };
            Failure(status, format!("{}: {e}", e.code()))
        })?;
        *dst = to_c(serde_json::to_string(&report).expect("reports serialize"));
        Ok(())
    })
}

/// Viability level of a delta in percentage points under the default
/// thresholds.
#[no_mangle]
pub extern "C" fn nf_classify_viability(delta_percent: f64) -> NfLevel {
    filter::classify_viability(delta_percent, &ViabilityThresholds::default()).into()
}
