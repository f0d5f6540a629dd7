//! C ABI over the levelscore library.
//!
//! Every fallible function returns an [`LsStatus`]; on failure a message is
//! kept per thread and can be read with [`ls_last_error_message`]. Objects are
//! opaque handles created by `*_new`/`*_load`/`*_build` functions and released
//! with the matching `*_free`. Output parameters are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use levelscore::analysis;
use levelscore::axis::{self, WindowScores};
use levelscore::bins::BinningSpec;
use levelscore::citegraph::{self, CitationGraph, GraphNode, ReachabilityMatrices};
use levelscore::corpus::{self, Category, MeshVocabulary, PaperRecord, SubtreeRoots};
use levelscore::embed::{self, TermEmbedding};
use levelscore::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    NotFound = 5,
    Empty = 6,
    Numeric = 7,
    Axis = 8,
    Utf8 = 9,
    Panic = 99,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LsCategory {
    CellMolecular = 0,
    Animal = 1,
    Human = 2,
    Neutral = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LsReachMatrix {
    R = 0,
    L = 1,
    Y = 2,
}

pub struct LsVocabulary(MeshVocabulary);
pub struct LsEmbedding(TermEmbedding);
pub struct LsAxis(WindowScores);
pub struct LsGraph(CitationGraph);
pub struct LsReach(ReachabilityMatrices);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> LsStatus {
    match e {
        Error::Parse { .. } | Error::Json(_) => LsStatus::Parse,
        Error::InvalidArgument(_) => LsStatus::InvalidArgument,
        Error::UnknownTerm(_) | Error::UnknownTermName(_) | Error::UnknownNode(_) | Error::YearOutOfRange { .. } => {
            LsStatus::NotFound
        }
        Error::Axis { .. } => LsStatus::Axis,
        Error::Empty(_) => LsStatus::Empty,
        Error::Numeric(_) => LsStatus::Numeric,
        Error::MissingStageInput { .. } | Error::Io { .. } => LsStatus::Io,
    }
}

struct Fail(LsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(LsStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LsStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            LsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(LsStatus::Utf8, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn split_roots(s: &str) -> Vec<String> {
    s.split(';').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect()
}

/// Message for the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ls_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn ls_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ls_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a `term<TAB>tree_number` file. Each roots argument is a
/// `;`-separated list of tree numbers or term names; null selects the default.
///
/// # Safety
/// String arguments must be null or valid NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_vocabulary_load(
    mesh_tree_path: *const c_char,
    cell_molecular_roots: *const c_char,
    animal_roots: *const c_char,
    human_roots: *const c_char,
    out: *mut *mut LsVocabulary,
) -> LsStatus {
    guard(|| {
        let path = str_arg(mesh_tree_path, "mesh_tree_path")?;
        let mut roots = SubtreeRoots::default();
        for (p, slot, what) in [
            (cell_molecular_roots, &mut roots.cell_molecular, "cell_molecular_roots"),
            (animal_roots, &mut roots.animal, "animal_roots"),
            (human_roots, &mut roots.human, "human_roots"),
        ] {
            if !p.is_null() {
                *slot = split_roots(str_arg(p, what)?);
            }
        }
        let v = corpus::load_mesh_tree(Path::new(path), &roots)?;
        write_out(out, Box::into_raw(Box::new(LsVocabulary(v))), "out")
    })
}

/// # Safety
/// `v` must be null or a handle from [`ls_vocabulary_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ls_vocabulary_free(v: *mut LsVocabulary) {
    if !v.is_null() {
        drop(Box::from_raw(v));
    }
}

/// # Safety
/// `v` must be a live vocabulary handle.
#[no_mangle]
pub unsafe extern "C" fn ls_vocabulary_len(v: *const LsVocabulary) -> usize {
    v.as_ref().map_or(0, |v| v.0.len())
}

/// # Safety
/// `v` must be a live handle, `name` a NUL-terminated string, `out_id` writable.
#[no_mangle]
pub unsafe extern "C" fn ls_vocabulary_term_id(v: *const LsVocabulary, name: *const c_char, out_id: *mut u32) -> LsStatus {
    guard(|| {
        let v = handle(v, "vocabulary")?;
        let name = str_arg(name, "name")?;
        let id = v.0.id(name).ok_or_else(|| Error::UnknownTermName(name.to_string()))?;
        write_out(out_id, id, "out_id")
    })
}

/// # Safety
/// `v` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ls_vocabulary_category(v: *const LsVocabulary, id: u32, out: *mut LsCategory) -> LsStatus {
    guard(|| {
        let v = handle(v, "vocabulary")?;
        let c = match v.0.classify_term(id)? {
            Category::BasicCellMolecular => LsCategory::CellMolecular,
            Category::BasicAnimal => LsCategory::Animal,
            Category::AppliedHuman => LsCategory::Human,
            Category::Neutral => LsCategory::Neutral,
        };
        write_out(out, c, "out")
    })
}

/// Reads an `emb_<t>.tsv` file for window `window_end`.
///
/// # Safety
/// `path` must be a NUL-terminated string, `v` a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ls_embedding_read(
    path: *const c_char,
    v: *const LsVocabulary,
    window_end: i32,
    out: *mut *mut LsEmbedding,
) -> LsStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let v = handle(v, "vocabulary")?;
        let (emb, _) = embed::read_embedding(Path::new(path), &v.0, window_end)?;
        write_out(out, Box::into_raw(Box::new(LsEmbedding(emb))), "out")
    })
}

/// Builds an embedding from `n_terms` row-major vectors of length `dim`.
///
/// # Safety
/// `terms` must hold `n_terms` ids and `vectors` `n_terms * dim` values.
#[no_mangle]
pub unsafe extern "C" fn ls_embedding_new(
    window_end: i32,
    dim: usize,
    terms: *const u32,
    n_terms: usize,
    vectors: *const f64,
    out: *mut *mut LsEmbedding,
) -> LsStatus {
    guard(|| {
        let terms = slice_arg(terms, n_terms, "terms")?;
        let len = n_terms
            .checked_mul(dim)
            .ok_or_else(|| Fail(LsStatus::InvalidArgument, "size overflow".into()))?;
        let vectors = slice_arg(vectors, len, "vectors")?;
        let emb = TermEmbedding::from_rows(window_end, dim, terms.to_vec(), vectors.to_vec())?;
        write_out(out, Box::into_raw(Box::new(LsEmbedding(emb))), "out")
    })
}

/// # Safety
/// `e` must be null or a live embedding handle.
#[no_mangle]
pub unsafe extern "C" fn ls_embedding_free(e: *mut LsEmbedding) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// # Safety
/// `e` must be a live embedding handle.
#[no_mangle]
pub unsafe extern "C" fn ls_embedding_dim(e: *const LsEmbedding) -> usize {
    e.as_ref().map_or(0, |e| e.0.dim())
}

/// # Safety
/// `e` must be a live embedding handle.
#[no_mangle]
pub unsafe extern "C" fn ls_embedding_len(e: *const LsEmbedding) -> usize {
    e.as_ref().map_or(0, |e| e.0.len())
}

/// Builds the basic-to-applied axis and term scores for one window. The
/// embedding is copied; both handles stay owned by the caller.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ls_axis_build(e: *const LsEmbedding, v: *const LsVocabulary, out: *mut *mut LsAxis) -> LsStatus {
    guard(|| {
        let e = handle(e, "embedding")?;
        let v = handle(v, "vocabulary")?;
        let ws = WindowScores::new(e.0.clone(), &v.0)?;
        write_out(out, Box::into_raw(Box::new(LsAxis(ws))), "out")
    })
}

/// # Safety
/// `a` must be null or a live axis handle.
#[no_mangle]
pub unsafe extern "C" fn ls_axis_free(a: *mut LsAxis) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Copies the axis vector into `buf`, which must hold the embedding dimension.
///
/// # Safety
/// `buf` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn ls_axis_vector(a: *const LsAxis, buf: *mut f64, len: usize) -> LsStatus {
    guard(|| {
        let a = handle(a, "axis")?;
        let v = &a.0.axis.vector;
        if len != v.len() {
            return Err(Fail(LsStatus::InvalidArgument, format!("buffer holds {len}, axis has {}", v.len())));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), buf, len);
        Ok(())
    })
}

/// Level score of one term; `LS_STATUS_NOT_FOUND` when it has no vector.
///
/// # Safety
/// `a` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ls_axis_term_score(a: *const LsAxis, term: u32, out: *mut f64) -> LsStatus {
    guard(|| {
        let a = handle(a, "axis")?;
        let s = a.0.score(term).ok_or(Error::UnknownTerm(term))?;
        write_out(out, s, "out")
    })
}

/// Paper score from its in-vocabulary term ids and original term count.
/// `out_scoreable` receives 0 when the majority rule fails, in which case
/// `out_score` is left untouched.
///
/// # Safety
/// `terms` must hold `n_terms` ids; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_axis_paper_score(
    a: *const LsAxis,
    terms: *const u32,
    n_terms: usize,
    n_original: usize,
    out_score: *mut f64,
    out_scoreable: *mut i32,
) -> LsStatus {
    guard(|| {
        let a = handle(a, "axis")?;
        let mut terms = slice_arg(terms, n_terms, "terms")?.to_vec();
        terms.sort_unstable();
        terms.dedup();
        let year = a.0.axis.window_end;
        let paper = PaperRecord {
            pmid: String::new(),
            year,
            journal: String::new(),
            n_original: n_original.max(terms.len()),
            terms,
            trial_phase: None,
        };
        let mut tables = axis::ScoreTables::default();
        tables.insert(a.0.clone());
        match axis::score_paper(&paper, &tables)?.score() {
            Some(s) => {
                write_out(out_scoreable, 1, "out_scoreable")?;
                write_out(out_score, s, "out_score")
            }
            None => write_out(out_scoreable, 0, "out_scoreable"),
        }
    })
}

/// Citation graph over `n_nodes` papers; edge `k` runs from `citing[k]` to
/// `cited[k]` (node indices). Self-loops and duplicates are dropped.
///
/// # Safety
/// `years` and `scores` must hold `n_nodes` values, `citing`/`cited` `n_edges`.
#[no_mangle]
pub unsafe extern "C" fn ls_graph_new(
    n_nodes: usize,
    years: *const i32,
    scores: *const f64,
    n_edges: usize,
    citing: *const u32,
    cited: *const u32,
    out: *mut *mut LsGraph,
) -> LsStatus {
    guard(|| {
        let years = slice_arg(years, n_nodes, "years")?;
        let scores = slice_arg(scores, n_nodes, "scores")?;
        let citing = slice_arg(citing, n_edges, "citing")?;
        let cited = slice_arg(cited, n_edges, "cited")?;
        let nodes = (0..n_nodes)
            .map(|i| GraphNode {
                pmid: i.to_string(),
                year: years[i],
                score: scores[i],
            })
            .collect();
        let edges = citing.iter().zip(cited).map(|(&a, &b)| (a as usize, b as usize));
        let g = CitationGraph::new(nodes, edges)?;
        write_out(out, Box::into_raw(Box::new(LsGraph(g))), "out")
    })
}

/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn ls_graph_free(g: *mut LsGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn ls_graph_edge_count(g: *const LsGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.edge_count())
}

/// Mean absolute score difference across edges; `LS_STATUS_EMPTY` without edges.
///
/// # Safety
/// `g` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ls_graph_homophily_gap(g: *const LsGraph, out: *mut f64) -> LsStatus {
    guard(|| {
        let g = handle(g, "graph")?;
        let v = citegraph::homophily_gap(&g.0).ok_or_else(|| Error::Empty("graph has no edges".into()))?;
        write_out(out, v, "out")
    })
}

/// Copy of `g` with scores permuted across nodes.
///
/// # Safety
/// `g` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ls_graph_shuffled(g: *const LsGraph, seed: u64, out: *mut *mut LsGraph) -> LsStatus {
    guard(|| {
        let g = handle(g, "graph")?;
        let s = citegraph::shuffled_null(&g.0, seed);
        write_out(out, Box::into_raw(Box::new(LsGraph(s))), "out")
    })
}

/// Source-bin by target-bin reachability averages over a seeded sample.
///
/// # Safety
/// `g` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ls_reach_aggregate(
    g: *const LsGraph,
    sample_fraction: f64,
    bin_width: f64,
    seed: u64,
    out: *mut *mut LsReach,
) -> LsStatus {
    guard(|| {
        let g = handle(g, "graph")?;
        let bins = BinningSpec::new(bin_width)?;
        let m = citegraph::aggregate_reach(&g.0, sample_fraction, &bins, seed)?;
        write_out(out, Box::into_raw(Box::new(LsReach(m))), "out")
    })
}

/// # Safety
/// `r` must be null or a live reach handle.
#[no_mangle]
pub unsafe extern "C" fn ls_reach_free(r: *mut LsReach) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be a live reach handle.
#[no_mangle]
pub unsafe extern "C" fn ls_reach_bins(r: *const LsReach) -> usize {
    r.as_ref().map_or(0, |r| r.0.bins.len())
}

/// Cell `(source_bin, target_bin)` of one matrix. `out_defined` receives 0
/// for an undefined cell, leaving `out_value` untouched.
///
/// # Safety
/// `r` must be live; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_reach_get(
    r: *const LsReach,
    which: LsReachMatrix,
    source_bin: usize,
    target_bin: usize,
    out_value: *mut f64,
    out_defined: *mut i32,
) -> LsStatus {
    guard(|| {
        let r = handle(r, "reach")?;
        let m = match which {
            LsReachMatrix::R => &r.0.r,
            LsReachMatrix::L => &r.0.l,
            LsReachMatrix::Y => &r.0.y,
        };
        let cell = m
            .get(source_bin)
            .and_then(|row| row.get(target_bin))
            .ok_or_else(|| Fail(LsStatus::InvalidArgument, format!("no cell ({source_bin}, {target_bin})")))?;
        match cell {
            Some(v) => {
                write_out(out_defined, 1, "out_defined")?;
                write_out(out_value, *v, "out_value")
            }
            None => write_out(out_defined, 0, "out_defined"),
        }
    })
}

/// Cosine similarity of two vectors of length `len`.
///
/// # Safety
/// `u` and `v` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_cosine(u: *const f64, v: *const f64, len: usize, out: *mut f64) -> LsStatus {
    guard(|| {
        let u = slice_arg(u, len, "u")?;
        let v = slice_arg(v, len, "v")?;
        write_out(out, embed::cosine_similarity(u, v)?, "out")
    })
}

/// One-sided permutation test of `median(b) > median(a)`.
///
/// # Safety
/// `a` and `b` must hold `na` and `nb` values; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_permutation_test_median(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    n_perm: usize,
    seed: u64,
    out_statistic: *mut f64,
    out_p: *mut f64,
) -> LsStatus {
    guard(|| {
        let a = slice_arg(a, na, "a")?;
        let b = slice_arg(b, nb, "b")?;
        let r = analysis::permutation_test_median(a, b, n_perm, seed)?;
        write_out(out_statistic, r.statistic, "out_statistic")?;
        write_out(out_p, r.p_value, "out_p")
    })
}

/// Histogram threshold between the two dominant modes. `out_found` receives
/// 0 for a unimodal histogram, leaving `out_threshold` untouched.
///
/// # Safety
/// `scores` must hold `n` values; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_detect_threshold(
    scores: *const f64,
    n: usize,
    bin_width: f64,
    out_threshold: *mut f64,
    out_found: *mut i32,
) -> LsStatus {
    guard(|| {
        let scores = slice_arg(scores, n, "scores")?;
        let h = analysis::histogram(scores, bin_width)?;
        match analysis::detect_threshold(&h) {
            Some(t) => {
                write_out(out_found, 1, "out_found")?;
                write_out(out_threshold, t, "out_threshold")
            }
            None => write_out(out_found, 0, "out_found"),
        }
    })
}
