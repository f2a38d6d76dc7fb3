//! C ABI over the coia toolkit.
//!
//! Objects cross the boundary as opaque handles that the caller releases with
//! the matching `*_free` function. Every fallible call returns a
//! [`CoiaStatus`]; on failure a message is available from
//! [`coia_last_error_message`] on the same thread until the next failing call.
//! Strings returned through `char **` out-parameters are owned by the caller
//! and must be released with [`coia_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use libc::{c_char, c_int, size_t};

use coia::corpus::{self, Post};
use coia::dismantle::{self, DismantleResult, GridSurface, ThresholdPolicy};
use coia::error::{DismantleError, SpectralError};
use coia::simgraph::{self, PairMode, SimilarityGraph};
use coia::spectral::CentralityConfig;
use coia::vectorize;
use coia::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoiaStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    NoTransition = 5,
    NotConverged = 6,
    Empty = 7,
    Io = 8,
    Panic = 99,
}

/// Parsed posts.
pub struct CoiaCorpus {
    posts: Vec<Post>,
}

/// Weighted account similarity graph.
pub struct CoiaGraph {
    graph: SimilarityGraph,
}

/// Grid of minimum component densities.
pub struct CoiaSurface {
    surface: GridSurface,
}

/// Accounts surviving dismantling at fixed thresholds.
pub struct CoiaDetection {
    result: DismantleResult,
}

/// One grid cell. `min_density` is NaN when `has_density` is 0.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoiaGridCell {
    pub edge_q: f64,
    pub node_q: f64,
    pub has_density: c_int,
    pub min_density: f64,
    pub n_nodes: size_t,
    pub n_edges: size_t,
    pub n_components: size_t,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    let c = CString::new(msg).expect("interior nul removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

struct Failure(CoiaStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(CoiaStatus::NullArgument, format!("{what} is null"))
    }
}

fn status_of(err: &Error) -> CoiaStatus {
    match err {
        Error::Corpus(_) | Error::Graph(coia::error::GraphError::EdgeList { .. }) => CoiaStatus::Parse,
        Error::Dismantle(DismantleError::NoTransition) => CoiaStatus::NoTransition,
        Error::Spectral(SpectralError::NoConvergence { .. })
        | Error::Dismantle(DismantleError::Spectral(SpectralError::NoConvergence { .. })) => {
            CoiaStatus::NotConverged
        }
        Error::Vectorize(_) | Error::Graph(coia::error::GraphError::EmptyQuantile) => CoiaStatus::Empty,
        Error::Io { .. } => CoiaStatus::Io,
        _ => CoiaStatus::InvalidArgument,
    }
}

impl<E: Into<Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let err = e.into();
        Failure(status_of(&err), err.to_string())
    }
}

/// Runs `body`, converting failures and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CoiaStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CoiaStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside coia");
            CoiaStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CoiaStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_handle<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    put(out, Box::into_raw(Box::new(value)), "out")
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure(CoiaStatus::InvalidArgument, "output contains nul".into()))?;
    put(out, c.into_raw(), "out")
}

unsafe fn axis_arg(p: *const f64, n: size_t) -> Vec<f64> {
    if p.is_null() || n == 0 {
        dismantle::default_axis()
    } else {
        slice::from_raw_parts(p, n).to_vec()
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn coia_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn coia_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must come from a coia `char **` out-parameter and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn coia_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses newline-delimited JSON posts.
///
/// # Safety
/// `jsonl` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coia_corpus_parse(jsonl: *const c_char, out: *mut *mut CoiaCorpus) -> CoiaStatus {
    guard(|| {
        let text = str_arg(jsonl, "jsonl")?;
        let posts = corpus::parse_posts(text.as_bytes())?;
        put_handle(out, CoiaCorpus { posts })
    })
}

/// # Safety
/// `corpus` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn coia_corpus_len(corpus: *const CoiaCorpus) -> size_t {
    corpus.as_ref().map_or(0, |c| c.posts.len())
}

/// # Safety
/// `corpus` must be a handle from [`coia_corpus_parse`] or NULL.
#[no_mangle]
pub unsafe extern "C" fn coia_corpus_free(corpus: *mut CoiaCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Builds the co-URL similarity graph: activity filter, DF filters, TF-IDF
/// and cosine pairs. `cross` nonzero keeps only pairs across platforms.
///
/// # Safety
/// `corpus` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coia_courl_graph(
    corpus: *const CoiaCorpus,
    min_unique_urls: size_t,
    min_df: size_t,
    max_df_quantile: f64,
    cross: c_int,
    out: *mut *mut CoiaGraph,
) -> CoiaStatus {
    guard(|| {
        let posts = &ref_arg(corpus, "corpus")?.posts;
        let active = corpus::filter_active_users(posts, min_unique_urls)?;
        let m = vectorize::build_user_url_matrix(posts, &active, true)?;
        let m = vectorize::apply_df_filters(&m, min_df, max_df_quantile)?;
        let t = vectorize::tfidf(&m)?;
        let mode = if cross != 0 { PairMode::Cross } else { PairMode::Intra };
        let graph = simgraph::cosine_pairs(&t, mode)?;
        put_handle(out, CoiaGraph { graph })
    })
}

/// Parses an edge CSV (`src_platform,src_user,dst_platform,dst_user,weight`).
///
/// # Safety
/// `csv` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coia_graph_from_edge_csv(csv: *const c_char, out: *mut *mut CoiaGraph) -> CoiaStatus {
    guard(|| {
        let graph = SimilarityGraph::from_edge_csv(str_arg(csv, "csv")?)?;
        put_handle(out, CoiaGraph { graph })
    })
}

/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coia_graph_to_edge_csv(graph: *const CoiaGraph, out: *mut *mut c_char) -> CoiaStatus {
    guard(|| put_string(out, ref_arg(graph, "graph")?.graph.to_edge_csv()))
}

/// # Safety
/// `graph` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn coia_graph_node_count(graph: *const CoiaGraph) -> size_t {
    graph.as_ref().map_or(0, |g| g.graph.n_nodes())
}

/// # Safety
/// `graph` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn coia_graph_edge_count(graph: *const CoiaGraph) -> size_t {
    graph.as_ref().map_or(0, |g| g.graph.n_edges())
}

/// # Safety
/// `graph` must be a graph handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn coia_graph_free(graph: *mut CoiaGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

fn centrality(max_iter: size_t) -> CentralityConfig {
    CentralityConfig {
        max_iter: if max_iter == 0 { 100_000 } else { max_iter },
        ..CentralityConfig::default()
    }
}

/// Grid search over the two quantile axes. A NULL axis or zero length selects
/// the default axis (0 to 0.95 in 0.05 steps, then 0.99). `max_iter` 0 picks
/// a generous centrality iteration budget.
///
/// # Safety
/// Axis pointers must address `n` readable doubles when non-NULL.
#[no_mangle]
pub unsafe extern "C" fn coia_grid_search(
    graph: *const CoiaGraph,
    edge_qs: *const f64,
    n_edge_qs: size_t,
    node_qs: *const f64,
    n_node_qs: size_t,
    max_iter: size_t,
    out: *mut *mut CoiaSurface,
) -> CoiaStatus {
    guard(|| {
        let g = &ref_arg(graph, "graph")?.graph;
        let e = axis_arg(edge_qs, n_edge_qs);
        let n = axis_arg(node_qs, n_node_qs);
        let surface = dismantle::grid_search(g, &e, &n, centrality(max_iter))?;
        put_handle(out, CoiaSurface { surface })
    })
}

/// # Safety
/// `surface` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn coia_surface_cell_count(surface: *const CoiaSurface) -> size_t {
    surface.as_ref().map_or(0, |s| s.surface.cells.len())
}

/// Cell `index` in edge-major order.
///
/// # Safety
/// `surface` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coia_surface_cell(
    surface: *const CoiaSurface,
    index: size_t,
    out: *mut CoiaGridCell,
) -> CoiaStatus {
    guard(|| {
        let s = &ref_arg(surface, "surface")?.surface;
        let c = s.cells.get(index).ok_or_else(|| {
            Failure(
                CoiaStatus::InvalidArgument,
                format!("cell index {index} out of range ({} cells)", s.cells.len()),
            )
        })?;
        let cell = CoiaGridCell {
            edge_q: c.edge_q,
            node_q: c.node_q,
            has_density: c_int::from(c.min_density.is_some()),
            min_density: c.min_density.unwrap_or(f64::NAN),
            n_nodes: c.n_nodes,
            n_edges: c.n_edges,
            n_components: c.n_components_ge2,
        };
        put(out, cell, "out")
    })
}

/// # Safety
/// `surface` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coia_surface_to_csv(surface: *const CoiaSurface, out: *mut *mut c_char) -> CoiaStatus {
    guard(|| put_string(out, ref_arg(surface, "surface")?.surface.to_csv()))
}

/// # Safety
/// `surface` must be a surface handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn coia_surface_free(surface: *mut CoiaSurface) {
    if !surface.is_null() {
        drop(Box::from_raw(surface));
    }
}

unsafe fn select(
    surface: *const CoiaSurface,
    policy: ThresholdPolicy,
    edge_q: *mut f64,
    node_q: *mut f64,
) -> CoiaStatus {
    guard(|| {
        let s = &ref_arg(surface, "surface")?.surface;
        let (e, n) = dismantle::select_thresholds(s, policy)?;
        put(edge_q, e, "edge_q")?;
        put(node_q, n, "node_q")
    })
}

/// Largest density jump among cells at or above `min_floor`.
///
/// # Safety
/// `surface` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn coia_select_auto(
    surface: *const CoiaSurface,
    min_floor: f64,
    edge_q: *mut f64,
    node_q: *mut f64,
) -> CoiaStatus {
    select(surface, ThresholdPolicy::Auto { min_floor }, edge_q, node_q)
}

/// Echoes a pair after checking it lies on the surface axes.
///
/// # Safety
/// `surface` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn coia_select_manual(
    surface: *const CoiaSurface,
    want_edge_q: f64,
    want_node_q: f64,
    edge_q: *mut f64,
    node_q: *mut f64,
) -> CoiaStatus {
    let policy = ThresholdPolicy::Manual {
        edge_q: want_edge_q,
        node_q: want_node_q,
    };
    select(surface, policy, edge_q, node_q)
}

/// Published threshold pair for `platform`.
///
/// # Safety
/// `platform` must be a NUL-terminated string; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn coia_preset(platform: *const c_char, edge_q: *mut f64, node_q: *mut f64) -> CoiaStatus {
    guard(|| {
        let name = str_arg(platform, "platform")?;
        let (e, n) = dismantle::preset_for(name)
            .ok_or_else(|| Failure(CoiaStatus::InvalidArgument, format!("no preset for platform {name:?}")))?;
        put(edge_q, e, "edge_q")?;
        put(node_q, n, "node_q")
    })
}

/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coia_detect(
    graph: *const CoiaGraph,
    edge_q: f64,
    node_q: f64,
    max_iter: size_t,
    out: *mut *mut CoiaDetection,
) -> CoiaStatus {
    guard(|| {
        let g = &ref_arg(graph, "graph")?.graph;
        if !(0.0..=1.0).contains(&edge_q) || !(0.0..=1.0).contains(&node_q) {
            return Err(Failure(CoiaStatus::InvalidArgument, "quantiles must lie in [0, 1]".into()));
        }
        let result = dismantle::detect_coordinated(g, edge_q, node_q, centrality(max_iter))?;
        put_handle(out, CoiaDetection { result })
    })
}

/// # Safety
/// `detection` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn coia_detection_account_count(detection: *const CoiaDetection) -> size_t {
    detection.as_ref().map_or(0, |d| d.result.coordinated.len())
}

/// Detection as JSON: selected thresholds, accounts with component ids, densities.
///
/// # Safety
/// `detection` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coia_detection_to_json(detection: *const CoiaDetection, out: *mut *mut c_char) -> CoiaStatus {
    guard(|| {
        let d = ref_arg(detection, "detection")?;
        put_string(out, d.result.to_json().to_string())
    })
}

/// # Safety
/// `detection` must be a detection handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn coia_detection_free(detection: *mut CoiaDetection) {
    if !detection.is_null() {
        drop(Box::from_raw(detection));
    }
}

/// Nearest-rank quantile of `n` values.
///
/// # Safety
/// `values` must address `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coia_quantile(values: *const f64, n: size_t, q: f64, out: *mut f64) -> CoiaStatus {
    guard(|| {
        if values.is_null() {
            return Err(Failure::null("values"));
        }
        let v = simgraph::quantile(slice::from_raw_parts(values, n), q)?;
        put(out, v, "out")
    })
}
