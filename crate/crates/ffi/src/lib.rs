//! C interface to the community-count estimator.
//!
//! Graphs and reports are opaque handles owned by the caller and released
//! with the matching `*_free` function. Every fallible call returns a
//! [`SmbicStatus`]; on failure [`smbic_last_error_message`] describes the
//! most recent error on the calling thread. Panics never cross the
//! boundary: they are caught and reported as [`SmbicStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use smbic::graph::{load_edge_list, Indexing, SparseGraph};
use smbic::selection::{select_k, RhoSource, SelectionConfig, SelectionReport, SubsampleSize};
use smbic::spectral::{Assignment, Model};
use smbic::subsample::recommended_subsample_size;
use smbic::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmbicStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Numeric = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmbicModel {
    Sbm = 0,
    Dcsbm = 1,
}

/// Selection options; initialise with [`smbic_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SmbicOptions {
    /// Largest candidate number of communities.
    pub k_max: usize,
    pub model: SmbicModel,
    pub seed: u64,
    /// Explicit subsample size; 0 uses the size rule.
    pub subsample_size: usize,
    /// Constant of the size rule `ceil(zeta ln N / rho)`.
    pub zeta: f64,
    /// Density for the size rule; 0 or negative estimates it from the graph.
    pub rho: f64,
    /// Label unselected nodes by majority link instead of k-means.
    pub majority_link: bool,
    /// Keep the degree log term in the degree-corrected likelihood.
    pub include_psi_term: bool,
}

/// An undirected simple graph.
pub struct SmbicGraph(SparseGraph);

/// The outcome of one selection run.
pub struct SmbicReport(SelectionReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> SmbicStatus {
    match e {
        Error::Parameter(_) | Error::InvalidGraph(_) | Error::Bounds { .. } => SmbicStatus::InvalidArgument,
        Error::Parse { .. } => SmbicStatus::Parse,
        Error::Io { .. } | Error::Json(_) => SmbicStatus::Io,
        Error::Numeric(_) | Error::Generator(_) => SmbicStatus::Numeric,
    }
}

fn fail(status: SmbicStatus, message: impl Into<String>) -> SmbicStatus {
    set_last_error(message);
    status
}

fn from_error(e: Error) -> SmbicStatus {
    let status = status_of(&e);
    fail(status, e.to_string())
}

/// Runs `f`, converting panics into [`SmbicStatus::Panic`].
fn guard(f: impl FnOnce() -> SmbicStatus) -> SmbicStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(SmbicStatus::Panic, format!("internal panic: {what}"))
        }
    }
}

fn config_of(opts: &SmbicOptions) -> SelectionConfig {
    SelectionConfig {
        k_max: opts.k_max,
        model: match opts.model {
            SmbicModel::Sbm => Model::Sbm,
            SmbicModel::Dcsbm => Model::Dcsbm,
        },
        seed: opts.seed,
        subsample: if opts.subsample_size > 0 {
            SubsampleSize::explicit(opts.subsample_size)
        } else {
            SubsampleSize::Rule {
                zeta: opts.zeta,
                rho: if opts.rho > 0.0 {
                    RhoSource::Known(opts.rho)
                } else {
                    RhoSource::Estimated
                },
            }
        },
        assignment: if opts.majority_link {
            Assignment::MajorityLink
        } else {
            Assignment::Spectral
        },
        include_psi_term: opts.include_psi_term,
        ..SelectionConfig::default()
    }
}

/// Fills `out` with the library defaults.
///
/// # Safety
/// `out` must be null or point to writable memory for one `SmbicOptions`.
#[no_mangle]
pub unsafe extern "C" fn smbic_options_default(out: *mut SmbicOptions) -> SmbicStatus {
    if out.is_null() {
        return fail(SmbicStatus::NullPointer, "options pointer is null");
    }
    let d = SelectionConfig::default();
    let (zeta, rho) = match d.subsample {
        SubsampleSize::Rule { zeta, .. } => (zeta, 0.0),
        SubsampleSize::Explicit { .. } => (1.5, 0.0),
    };
    out.write(SmbicOptions {
        k_max: d.k_max,
        model: SmbicModel::Sbm,
        seed: d.seed,
        subsample_size: 0,
        zeta,
        rho,
        majority_link: d.assignment == Assignment::MajorityLink,
        include_psi_term: d.include_psi_term,
    });
    SmbicStatus::Ok
}

/// Loads a whitespace-separated edge list (see FORMATS.md).
///
/// # Safety
/// `path` must be null or a NUL-terminated string; `out` must be null or
/// point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn smbic_graph_load(path: *const c_char, one_based: bool, out: *mut *mut SmbicGraph) -> SmbicStatus {
    if path.is_null() || out.is_null() {
        return fail(SmbicStatus::NullPointer, "path or output pointer is null");
    }
    let path = match CStr::from_ptr(path).to_str() {
        Ok(p) => p.to_owned(),
        Err(_) => return fail(SmbicStatus::InvalidArgument, "path is not valid UTF-8"),
    };
    guard(|| {
        let indexing = if one_based {
            Indexing::OneBased
        } else {
            Indexing::ZeroBased
        };
        match load_edge_list(Path::new(&path), indexing) {
            Ok(g) => {
                out.write(Box::into_raw(Box::new(SmbicGraph(g))));
                SmbicStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Builds a graph on `num_nodes` nodes from `num_edges` pairs
/// `(src[i], dst[i])`. Self-loops and duplicates are dropped.
///
/// # Safety
/// `src` and `dst` must each point to `num_edges` readable values (or may
/// be null when `num_edges` is 0); `out` must point to writable memory for
/// one pointer.
#[no_mangle]
pub unsafe extern "C" fn smbic_graph_from_edges(
    num_nodes: usize,
    src: *const usize,
    dst: *const usize,
    num_edges: usize,
    out: *mut *mut SmbicGraph,
) -> SmbicStatus {
    if out.is_null() || (num_edges > 0 && (src.is_null() || dst.is_null())) {
        return fail(SmbicStatus::NullPointer, "edge arrays or output pointer is null");
    }
    let (src, dst) = if num_edges == 0 {
        (&[][..], &[][..])
    } else {
        (
            std::slice::from_raw_parts(src, num_edges),
            std::slice::from_raw_parts(dst, num_edges),
        )
    };
    guard(|| match SparseGraph::from_edges(num_nodes, src.iter().copied().zip(dst.iter().copied())) {
        Ok((g, _)) => {
            out.write(Box::into_raw(Box::new(SmbicGraph(g))));
            SmbicStatus::Ok
        }
        Err(e) => from_error(e),
    })
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn smbic_graph_num_nodes(graph: *const SmbicGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.num_nodes())
}

/// Number of undirected edges, or 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn smbic_graph_num_edges(graph: *const SmbicGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.num_edges())
}

/// Releases a graph; null is ignored.
///
/// # Safety
/// `graph` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn smbic_graph_free(graph: *mut SmbicGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Runs model selection on `graph`.
///
/// # Safety
/// `graph` must be a live handle, `options` must point to a valid
/// `SmbicOptions`, and `out` must point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn smbic_select(
    graph: *const SmbicGraph,
    options: *const SmbicOptions,
    out: *mut *mut SmbicReport,
) -> SmbicStatus {
    let (Some(graph), Some(options)) = (graph.as_ref(), options.as_ref()) else {
        return fail(SmbicStatus::NullPointer, "graph or options pointer is null");
    };
    if out.is_null() {
        return fail(SmbicStatus::NullPointer, "output pointer is null");
    }
    let cfg = config_of(options);
    guard(|| match select_k(&graph.0, &cfg) {
        Ok(report) => {
            out.write(Box::into_raw(Box::new(SmbicReport(report))));
            SmbicStatus::Ok
        }
        Err(e) => from_error(e),
    })
}

/// The selected number of communities, or 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn smbic_report_k_hat(report: *const SmbicReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.k_hat)
}

/// Number of candidates scored (`k_max`), or 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn smbic_report_num_candidates(report: *const SmbicReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.per_k.len())
}

/// Subsample size used, or 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn smbic_report_subsample_size(report: *const SmbicReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.subsample_size)
}

/// Writes the score of candidate `k` (1-based); failed candidates score
/// negative infinity.
///
/// # Safety
/// `report` must be a live handle and `out` must point to one writable
/// `double`.
#[no_mangle]
pub unsafe extern "C" fn smbic_report_score(report: *const SmbicReport, k: usize, out: *mut f64) -> SmbicStatus {
    let Some(report) = report.as_ref() else {
        return fail(SmbicStatus::NullPointer, "report pointer is null");
    };
    if out.is_null() {
        return fail(SmbicStatus::NullPointer, "output pointer is null");
    }
    match report.0.per_k.iter().find(|f| f.k == k) {
        Some(fit) => {
            out.write(fit.score);
            SmbicStatus::Ok
        }
        None => fail(SmbicStatus::InvalidArgument, format!("no candidate K={k}")),
    }
}

/// Copies the node labels of candidate `k` into `out`, which must hold
/// `len` values with `len` equal to the number of nodes.
///
/// # Safety
/// `report` must be a live handle and `out` must point to `len` writable
/// `size_t` values.
#[no_mangle]
pub unsafe extern "C" fn smbic_report_labels(
    report: *const SmbicReport,
    k: usize,
    out: *mut usize,
    len: usize,
) -> SmbicStatus {
    let Some(report) = report.as_ref() else {
        return fail(SmbicStatus::NullPointer, "report pointer is null");
    };
    if out.is_null() {
        return fail(SmbicStatus::NullPointer, "output pointer is null");
    }
    let Some(fit) = report.0.per_k.iter().find(|f| f.k == k) else {
        return fail(SmbicStatus::InvalidArgument, format!("no candidate K={k}"));
    };
    let Some(labels) = &fit.labels else {
        return fail(SmbicStatus::InvalidArgument, format!("candidate K={k} has no labels"));
    };
    if labels.labels.len() != len {
        return fail(
            SmbicStatus::InvalidArgument,
            format!("buffer holds {len} labels, the network has {}", labels.labels.len()),
        );
    }
    std::slice::from_raw_parts_mut(out, len).copy_from_slice(&labels.labels);
    SmbicStatus::Ok
}

/// Serializes the full report as JSON into a new string released with
/// [`smbic_string_free`].
///
/// # Safety
/// `report` must be a live handle and `out` must point to writable memory
/// for one pointer.
#[no_mangle]
pub unsafe extern "C" fn smbic_report_to_json(report: *const SmbicReport, out: *mut *mut c_char) -> SmbicStatus {
    let Some(report) = report.as_ref() else {
        return fail(SmbicStatus::NullPointer, "report pointer is null");
    };
    if out.is_null() {
        return fail(SmbicStatus::NullPointer, "output pointer is null");
    }
    guard(|| match serde_json::to_string(&report.0) {
        Ok(json) => match CString::new(json) {
            Ok(s) => {
                out.write(s.into_raw());
                SmbicStatus::Ok
            }
            Err(_) => fail(SmbicStatus::Numeric, "report contains a NUL byte"),
        },
        Err(e) => fail(SmbicStatus::Io, e.to_string()),
    })
}

/// Releases a report; null is ignored.
///
/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn smbic_report_free(report: *mut SmbicReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn smbic_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `min(N, ceil(zeta ln N / rho))`.
///
/// # Safety
/// `out` must point to one writable `uint64_t`.
#[no_mangle]
pub unsafe extern "C" fn smbic_recommended_subsample_size(
    num_nodes: u64,
    rho: f64,
    zeta: f64,
    out: *mut u64,
) -> SmbicStatus {
    if out.is_null() {
        return fail(SmbicStatus::NullPointer, "output pointer is null");
    }
    match recommended_subsample_size(num_nodes, rho, zeta) {
        Ok(n) => {
            out.write(n);
            SmbicStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// The message of the last failed call on this thread, or null. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn smbic_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn smbic_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
