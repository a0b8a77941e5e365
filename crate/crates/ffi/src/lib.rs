//! C ABI for the community detection pipeline: opaque graph handles,
//! integer status codes, and caller-owned output buffers. Every entry
//! point catches panics and converts them into a status code; a
//! per-thread message slot carries the details.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use predassign::assign::{predictive_assign, Model, PipelineConfig};
use predassign::blockmodel::{
    balanced_proportions, dcbm_block_matrix, sample_dcbm, sample_sbm, sbm_block_matrix,
};
use predassign::graph::SparseGraph;
use predassign::membership::Membership;
use predassign::metrics::matched_errors;
use predassign::sampling::{Sampler, SubsampleIndex};
use predassign::spectral::{ClusterMethod, SpectralParams};
use predassign::Error;

/// Opaque handle to an immutable sparse graph.
pub struct PaGraph {
    inner: SparseGraph,
}

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaStatus {
    PaOk = 0,
    PaNullPointer = 1,
    PaInvalidArgument = 2,
    PaParseError = 3,
    PaIoError = 4,
    PaConvergenceError = 5,
    PaEmptyCommunity = 6,
    PaDisconnectedCommunity = 7,
    PaInternalError = 8,
}

/// Subsampling scheme selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaSampler {
    PaSamplerSrs = 0,
    PaSamplerRws = 1,
}

/// Subgraph clustering variant selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaMethod {
    PaMethodSc = 0,
    PaMethodScLap = 1,
    PaMethodRsc = 2,
    PaMethodRscLap = 3,
    PaMethodBasc = 4,
}

/// Assignment-rule selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaModel {
    PaModelSbm = 0,
    PaModelDcbm = 1,
}

/// Error split and run counters for one evaluation or detection run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PaErrorReport {
    pub delta_s: f64,
    pub delta_sc: f64,
    pub delta: f64,
    pub delta_tilde_s: f64,
    pub wrong_s: u64,
    pub wrong_sc: u64,
    pub n: u64,
    pub m: u64,
    pub fallback_count: u64,
    pub t_sample_s: f64,
    pub t_cluster_s: f64,
    pub t_assign_s: f64,
    pub t_total_s: f64,
    pub peak_mem_bytes: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> PaStatus {
    match err {
        Error::Parse { .. } => PaStatus::PaParseError,
        Error::IndexOutOfRange { .. } | Error::InvalidParams(_) => PaStatus::PaInvalidArgument,
        Error::Convergence { .. } => PaStatus::PaConvergenceError,
        Error::EmptyEstimatedCommunity(_) => PaStatus::PaEmptyCommunity,
        Error::DisconnectedEstimatedCommunity(_) => PaStatus::PaDisconnectedCommunity,
        Error::Io(_) => PaStatus::PaIoError,
    }
}

/// Runs a closure, mapping library errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), PaStatus> + std::panic::UnwindSafe) -> PaStatus {
    match catch_unwind(f) {
        Ok(Ok(())) => PaStatus::PaOk,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("panic inside library call");
            PaStatus::PaInternalError
        }
    }
}

fn fail(err: Error) -> PaStatus {
    set_error(&err.to_string());
    status_of(&err)
}

/// Copies the most recent error message for this thread into `buf`
/// (NUL-terminated, truncated to `len`). Returns the full message length
/// in bytes, excluding the terminator.
/// # Safety
/// `buf` must be null or point to at least `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pa_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Reads an edge-list file (same format as the CLI) into a new graph
/// handle. The handle must be released with `pa_graph_free`.
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn pa_graph_from_edge_list(
    path: *const c_char,
    out: *mut *mut PaGraph,
) -> PaStatus {
    guard(AssertUnwindSafe(|| {
        if path.is_null() || out.is_null() {
            set_error("null pointer argument");
            return Err(PaStatus::PaNullPointer);
        }
        let path = unsafe { CStr::from_ptr(path) }.to_str().map_err(|_| {
            set_error("path is not valid UTF-8");
            PaStatus::PaInvalidArgument
        })?;
        let file = File::open(path).map_err(|e| fail(Error::Io(e)))?;
        let g = SparseGraph::from_edge_list(BufReader::new(file)).map_err(fail)?;
        unsafe { *out = Box::into_raw(Box::new(PaGraph { inner: g })) };
        Ok(())
    }))
}

/// Builds a graph from `n_edges` undirected pairs laid out as
/// `[u0, v0, u1, v1, ...]`. Self-loops are dropped and duplicates merged.
/// # Safety
/// `pairs` must point to `2 * n_edges` readable u32 values and `out`
/// must be a valid slot.
#[no_mangle]
pub unsafe extern "C" fn pa_graph_from_edges(
    n_nodes: u64,
    pairs: *const u32,
    n_edges: u64,
    out: *mut *mut PaGraph,
) -> PaStatus {
    guard(AssertUnwindSafe(|| {
        if out.is_null() || (pairs.is_null() && n_edges > 0) {
            set_error("null pointer argument");
            return Err(PaStatus::PaNullPointer);
        }
        let flat = unsafe { std::slice::from_raw_parts(pairs, (n_edges * 2) as usize) };
        let edges: Vec<(u32, u32)> = flat.chunks_exact(2).map(|p| (p[0], p[1])).collect();
        let g = SparseGraph::from_edges(Some(n_nodes as usize), &edges).map_err(fail)?;
        unsafe { *out = Box::into_raw(Box::new(PaGraph { inner: g })) };
        Ok(())
    }))
}

/// Releases a graph handle; a null pointer is ignored.
/// # Safety
/// `g` must be null or a handle returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pa_graph_free(g: *mut PaGraph) {
    if !g.is_null() {
        drop(unsafe { Box::from_raw(g) });
    }
}

/// # Safety
/// `g` must be null or a live handle returned by this library.
#[no_mangle]
pub unsafe extern "C" fn pa_graph_node_count(g: *const PaGraph) -> u64 {
    if g.is_null() {
        return 0;
    }
    unsafe { &*g }.inner.node_count() as u64
}

/// Number of undirected edges.
/// # Safety
/// `g` must be null or a live handle returned by this library.
#[no_mangle]
pub unsafe extern "C" fn pa_graph_edge_count(g: *const PaGraph) -> u64 {
    if g.is_null() {
        return 0;
    }
    unsafe { &*g }.inner.edge_count() as u64
}

/// Samples a block-model graph with balanced communities. `labels_out`
/// may be null; otherwise it must hold `n` u32 slots.
/// # Safety
/// `out` must be a valid slot; `labels_out` must be null or hold `n`
/// writable u32 values.
#[no_mangle]
pub unsafe extern "C" fn pa_generate_sbm(
    n: u64,
    k: u64,
    alpha: f64,
    h: f64,
    seed: u64,
    out: *mut *mut PaGraph,
    labels_out: *mut u32,
) -> PaStatus {
    guard(AssertUnwindSafe(|| {
        if out.is_null() {
            set_error("null pointer argument");
            return Err(PaStatus::PaNullPointer);
        }
        let omega = sbm_block_matrix(k as usize, alpha, h).map_err(fail)?;
        let (g, membership) =
            sample_sbm(n as usize, &omega, &balanced_proportions(k as usize), seed)
                .map_err(fail)?;
        if !labels_out.is_null() {
            let dst = unsafe { std::slice::from_raw_parts_mut(labels_out, n as usize) };
            dst.copy_from_slice(membership.labels());
        }
        unsafe { *out = Box::into_raw(Box::new(PaGraph { inner: g })) };
        Ok(())
    }))
}

/// Samples a degree-corrected graph with Beta(1,5) degree parameters and
/// the given expected density. `labels_out` and `theta_out` may be null;
/// otherwise they must hold `n` slots each.
/// # Safety
/// `out` must be a valid slot; `labels_out` and `theta_out` must each be
/// null or hold `n` writable values.
#[no_mangle]
pub unsafe extern "C" fn pa_generate_dcbm(
    n: u64,
    k: u64,
    density: f64,
    h: f64,
    seed: u64,
    out: *mut *mut PaGraph,
    labels_out: *mut u32,
    theta_out: *mut f64,
) -> PaStatus {
    guard(AssertUnwindSafe(|| {
        if out.is_null() {
            set_error("null pointer argument");
            return Err(PaStatus::PaNullPointer);
        }
        let omega0 = dcbm_block_matrix(k as usize, 1.0, h).map_err(fail)?;
        let (g, membership, theta) = sample_dcbm(
            n as usize,
            &omega0,
            &balanced_proportions(k as usize),
            density,
            (1.0, 5.0),
            seed,
        )
        .map_err(fail)?;
        if !labels_out.is_null() {
            let dst = unsafe { std::slice::from_raw_parts_mut(labels_out, n as usize) };
            dst.copy_from_slice(membership.labels());
        }
        if !theta_out.is_null() {
            let dst = unsafe { std::slice::from_raw_parts_mut(theta_out, n as usize) };
            dst.copy_from_slice(theta.theta());
        }
        unsafe { *out = Box::into_raw(Box::new(PaGraph { inner: g })) };
        Ok(())
    }))
}

/// Runs the full pipeline on `g` and writes one label per node into
/// `labels_out` (length `node_count`). `report_out` may be null.
/// # Safety
/// `g` must be a live handle, `labels_out` must hold `node_count`
/// writable u32 values, and `report_out` must be null or valid.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn pa_detect(
    g: *const PaGraph,
    k: u64,
    m: u64,
    model: PaModel,
    sampler: PaSampler,
    method: PaMethod,
    seed: u64,
    threads: u64,
    labels_out: *mut u32,
    report_out: *mut PaErrorReport,
) -> PaStatus {
    guard(AssertUnwindSafe(|| {
        if g.is_null() || labels_out.is_null() {
            set_error("null pointer argument");
            return Err(PaStatus::PaNullPointer);
        }
        let g = &unsafe { &*g }.inner;
        let cfg = PipelineConfig {
            model: match model {
                PaModel::PaModelSbm => Model::Sbm,
                PaModel::PaModelDcbm => Model::Dcbm,
            },
            sampler: match sampler {
                PaSampler::PaSamplerSrs => Sampler::Srs,
                PaSampler::PaSamplerRws => Sampler::Rws,
            },
            m: m as usize,
            method: match method {
                PaMethod::PaMethodSc => ClusterMethod::Sc,
                PaMethod::PaMethodScLap => ClusterMethod::ScLap,
                PaMethod::PaMethodRsc => ClusterMethod::Rsc,
                PaMethod::PaMethodRscLap => ClusterMethod::RscLap,
                PaMethod::PaMethodBasc => ClusterMethod::Basc,
            },
            seed,
            threads: threads as usize,
            spectral: SpectralParams::default(),
        };
        let out = predictive_assign(g, k as usize, &cfg).map_err(fail)?;
        let dst = unsafe { std::slice::from_raw_parts_mut(labels_out, g.node_count()) };
        dst.copy_from_slice(out.membership.labels());
        if !report_out.is_null() {
            let r = &out.report;
            unsafe {
                *report_out = PaErrorReport {
                    n: r.n as u64,
                    m: r.m as u64,
                    fallback_count: r.fallback_count,
                    t_sample_s: r.t_sample_s,
                    t_cluster_s: r.t_cluster_s,
                    t_assign_s: r.t_assign_s,
                    t_total_s: r.t_total_s,
                    peak_mem_bytes: r.peak_mem_bytes,
                    ..PaErrorReport::default()
                };
            }
        }
        Ok(())
    }))
}

/// Compares estimated labels against ground truth under the optimal label
/// permutation. `s_nodes` lists the subsampled node ids (`s_len` of them);
/// pass null / 0 to treat every node as in-sample.
/// # Safety
/// `truth` and `est` must hold `n` readable values, `s_nodes` must be
/// null or hold `s_len` values, and `report_out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pa_eval(
    truth: *const u32,
    est: *const u32,
    n: u64,
    s_nodes: *const u32,
    s_len: u64,
    report_out: *mut PaErrorReport,
) -> PaStatus {
    guard(AssertUnwindSafe(|| {
        if truth.is_null() || est.is_null() || report_out.is_null() {
            set_error("null pointer argument");
            return Err(PaStatus::PaNullPointer);
        }
        let n = n as usize;
        let truth = unsafe { std::slice::from_raw_parts(truth, n) };
        let est = unsafe { std::slice::from_raw_parts(est, n) };
        let k = truth
            .iter()
            .chain(est)
            .map(|&l| l as usize + 1)
            .max()
            .unwrap_or(1);
        let s = if s_nodes.is_null() || s_len == 0 {
            SubsampleIndex::new(n, (0..n as u32).collect())
        } else {
            let ids = unsafe { std::slice::from_raw_parts(s_nodes, s_len as usize) };
            SubsampleIndex::new(n, ids.to_vec())
        }
        .map_err(fail)?;
        let truth = Membership::new(truth.to_vec(), k).map_err(fail)?;
        let est = Membership::new(est.to_vec(), k).map_err(fail)?;
        let r = matched_errors(&truth, &est, &s).map_err(fail)?;
        unsafe {
            *report_out = PaErrorReport {
                delta_s: r.delta_s,
                delta_sc: r.delta_sc,
                delta: r.delta,
                delta_tilde_s: r.delta_tilde_s,
                wrong_s: r.wrong_s,
                wrong_sc: r.wrong_sc,
                n: r.n as u64,
                m: r.m as u64,
                ..PaErrorReport::default()
            };
        }
        Ok(())
    }))
}
