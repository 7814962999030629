//! C interface to cohort-core.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `_free` function. Every fallible call returns a `CohortStatus`;
//! on failure `cohort_last_error` describes the problem for the current
//! thread. Strings returned through out-parameters are NUL-terminated UTF-8
//! and must be released with `cohort_string_free`. Structured values cross
//! the boundary as JSON.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use cohort_core::corpus::LoadedIndex;
use cohort_core::lm::{rank_documents, Query, RankingParams};
use cohort_core::session::{Decisions, ExpansionSession, SessionStatus};
use cohort_core::stats::{pearson, prevalence_per_100k};
use cohort_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CohortStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    DataError = 4,
    WrongStatus = 5,
    InvalidDecisions = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CohortSessionStatus {
    AwaitingIteration = 0,
    AwaitingDecisions = 1,
    Converged = 2,
}

/// A loaded index cache.
pub struct CohortIndex {
    inner: Arc<LoadedIndex>,
}

/// An expansion session bound to the index it was created from. Keeps its
/// own reference to the index, so the index handle may be freed first.
pub struct CohortSession {
    index: Arc<LoadedIndex>,
    session: ExpansionSession,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CohortStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::WrongStatus { .. } => CohortStatus::WrongStatus,
            Error::InvalidDecisions(_) => CohortStatus::InvalidDecisions,
            Error::InvalidParameter(_) | Error::EmptyQuery => CohortStatus::InvalidArgument,
            _ => CohortStatus::DataError,
        };
        Failure(status, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(CohortStatus::InvalidArgument, format!("json: {e}"))
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> CohortStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CohortStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            CohortStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CohortStatus::NullArgument, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CohortStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn mut_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    let c = CString::new(s).map_err(|_| Failure(CohortStatus::DataError, "string contains NUL".into()))?;
    out.write(c.into_raw());
    Ok(())
}

fn params(alpha: f64, top_docs: usize, top_terms: usize) -> Result<RankingParams, Failure> {
    let p = RankingParams {
        alpha,
        top_docs,
        top_terms,
    };
    p.validate()?;
    Ok(p)
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn cohort_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn cohort_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Opens an index cache file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cohort_index_open(path: *const c_char, out: *mut *mut CohortIndex) -> CohortStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let idx = LoadedIndex::open(Path::new(path))?;
        let h = Box::new(CohortIndex { inner: Arc::new(idx) });
        put(out, Box::into_raw(h), "out")
    })
}

/// # Safety
/// `index` must come from `cohort_index_open` and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn cohort_index_free(index: *mut CohortIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// Documents, vocabulary terms and authors in the index.
///
/// # Safety
/// `index` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn cohort_index_counts(
    index: *const CohortIndex,
    documents: *mut u64,
    terms: *mut u64,
    authors: *mut u64,
) -> CohortStatus {
    guard(|| {
        let idx = &ref_arg(index, "index")?.inner;
        put(documents, idx.document_count() as u64, "documents")?;
        put(terms, idx.vocabulary().len() as u64, "terms")?;
        put(authors, idx.author_count() as u64, "authors")
    })
}

/// SHA-256 of the cache contents, as lowercase hex.
///
/// # Safety
/// `index` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cohort_index_fingerprint(index: *const CohortIndex, out: *mut *mut c_char) -> CohortStatus {
    guard(|| {
        let idx = &ref_arg(index, "index")?.inner;
        put_string(out, idx.fingerprint.clone())
    })
}

/// Ranks every document for a query given as a JSON array of terms.
/// Writes a JSON array of `{"document", "score", "total_words"}`.
///
/// # Safety
/// `index` must be a live handle; `query_json` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cohort_rank_documents(
    index: *const CohortIndex,
    query_json: *const c_char,
    alpha: f64,
    out: *mut *mut c_char,
) -> CohortStatus {
    guard(|| {
        let idx = &ref_arg(index, "index")?.inner;
        let terms: Vec<String> = serde_json::from_str(str_arg(query_json, "query_json")?)?;
        let p = RankingParams {
            alpha,
            ..RankingParams::default()
        };
        p.validate()?;
        let q = Query::from_terms(idx, &terms)?;
        let ranked = rank_documents(idx, &q, &p)?;
        let rows: Vec<_> = ranked
            .iter()
            .map(|s| {
                let d = idx.document(s.doc);
                serde_json::json!({ "document": d.name, "score": s.score, "total_words": d.total_words() })
            })
            .collect();
        put_string(out, serde_json::to_string(&rows)?)
    })
}

/// Starts a session from a JSON array of seed terms.
///
/// # Safety
/// `index` must be a live handle; `seeds_json` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cohort_session_create(
    index: *const CohortIndex,
    seeds_json: *const c_char,
    alpha: f64,
    top_docs: usize,
    top_terms: usize,
    out: *mut *mut CohortSession,
) -> CohortStatus {
    guard(|| {
        let idx = Arc::clone(&ref_arg(index, "index")?.inner);
        let seeds: Vec<String> = serde_json::from_str(str_arg(seeds_json, "seeds_json")?)?;
        let session = ExpansionSession::create(&idx, &seeds, params(alpha, top_docs, top_terms)?)?;
        let h = Box::new(CohortSession { index: idx, session });
        put(out, Box::into_raw(h), "out")
    })
}

/// Restores a session saved with `cohort_session_to_json`.
///
/// # Safety
/// `index` must be a live handle; `json` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cohort_session_from_json(
    index: *const CohortIndex,
    json: *const c_char,
    out: *mut *mut CohortSession,
) -> CohortStatus {
    guard(|| {
        let idx = Arc::clone(&ref_arg(index, "index")?.inner);
        let session = ExpansionSession::from_json(str_arg(json, "json")?, &idx)?;
        let h = Box::new(CohortSession { index: idx, session });
        put(out, Box::into_raw(h), "out")
    })
}

/// # Safety
/// `session` must come from this library and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn cohort_session_free(session: *mut CohortSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Runs the next iteration. When `record_out` is not NULL it receives the
/// iteration record as JSON.
///
/// # Safety
/// `session` must be a live handle; `record_out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn cohort_session_iterate(session: *mut CohortSession, record_out: *mut *mut c_char) -> CohortStatus {
    guard(|| {
        let s = mut_arg(session, "session")?;
        let rec = s.session.run_iteration(&s.index)?;
        if record_out.is_null() {
            Ok(())
        } else {
            let json = serde_json::to_string(rec)?;
            put_string(record_out, json)
        }
    })
}

/// Submits decisions as a JSON object mapping every candidate to
/// `"accept"` or `"reject"`. `decided_by` may be NULL.
///
/// # Safety
/// `session` must be a live handle; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cohort_session_decide(
    session: *mut CohortSession,
    decisions_json: *const c_char,
    decided_by: *const c_char,
) -> CohortStatus {
    guard(|| {
        let s = mut_arg(session, "session")?;
        let decisions: Decisions = serde_json::from_str(str_arg(decisions_json, "decisions_json")?)
            .map_err(|e| Failure(CohortStatus::InvalidDecisions, format!("json: {e}")))?;
        let who = if decided_by.is_null() {
            None
        } else {
            Some(str_arg(decided_by, "decided_by")?)
        };
        s.session.submit_decisions(&decisions, who)?;
        Ok(())
    })
}

/// # Safety
/// `session` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cohort_session_status(session: *const CohortSession, out: *mut CohortSessionStatus) -> CohortStatus {
    guard(|| {
        let s = ref_arg(session, "session")?;
        let st = match s.session.status {
            SessionStatus::AwaitingIteration => CohortSessionStatus::AwaitingIteration,
            SessionStatus::AwaitingDecisions => CohortSessionStatus::AwaitingDecisions,
            SessionStatus::Converged => CohortSessionStatus::Converged,
        };
        put(out, st, "out")
    })
}

/// The full session document as JSON.
///
/// # Safety
/// `session` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cohort_session_to_json(session: *const CohortSession, out: *mut *mut c_char) -> CohortStatus {
    guard(|| {
        let s = ref_arg(session, "session")?;
        put_string(out, s.session.to_json()?)
    })
}

/// Pearson correlation with its two-sided p-value.
///
/// # Safety
/// `x` and `y` must point to `n` doubles each; `r` and `p_value` writable.
#[no_mangle]
pub unsafe extern "C" fn cohort_pearson(
    x: *const f64,
    y: *const f64,
    n: usize,
    r: *mut f64,
    p_value: *mut f64,
) -> CohortStatus {
    guard(|| {
        if x.is_null() || y.is_null() {
            return Err(null("x or y"));
        }
        let (xs, ys) = (std::slice::from_raw_parts(x, n), std::slice::from_raw_parts(y, n));
        let c = pearson(xs, ys)?;
        put(r, c.r, "r")?;
        put(p_value, c.p_value, "p_value")
    })
}

/// Cohort authors per 100,000 geolocated authors.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cohort_prevalence(cohort: u64, geolocated: u64, out: *mut f64) -> CohortStatus {
    guard(|| {
        if geolocated == 0 {
            return Err(Failure(CohortStatus::InvalidArgument, "geolocated must be positive".into()));
        }
        put(out, prevalence_per_100k(cohort, geolocated), "out")
    })
}
