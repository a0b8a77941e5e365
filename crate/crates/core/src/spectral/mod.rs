//! Subgraph clustering for Step 2: truncated eigendecomposition of a
//! variant-specific operator followed by k-means on the embedding rows.

pub mod eigen;
pub mod kmeans;
pub mod operators;

pub use eigen::{topk_eig, Embedding, SymmetricOperator};
pub use kmeans::{kmeans, KmeansResult};
pub use operators::{adjacency_op, basc_op, laplacian_op};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::membership::Membership;
use crate::sampling::SubsampleIndex;
use crate::seed::derive_seed;

/// Clustering variant applied to the subgraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterMethod {
    /// Adjacency eigenvectors.
    Sc,
    /// Degree-normalized adjacency eigenvectors.
    ScLap,
    /// Adjacency eigenvectors with row-normalized embedding.
    Rsc,
    /// Degree-normalized adjacency with row-normalized embedding.
    RscLap,
    /// Bias-adjusted operator over the full-by-S slice.
    Basc,
}

impl ClusterMethod {
    /// True when the variant reads the rectangular all-by-S slice instead
    /// of the square S-by-S subgraph.
    pub fn uses_rectangular_slice(self) -> bool {
        matches!(self, ClusterMethod::Basc)
    }

    pub fn name(self) -> &'static str {
        match self {
            ClusterMethod::Sc => "sc",
            ClusterMethod::ScLap => "sc_lap",
            ClusterMethod::Rsc => "rsc",
            ClusterMethod::RscLap => "rsc_lap",
            ClusterMethod::Basc => "basc",
        }
    }
}

impl std::str::FromStr for ClusterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sc" => Ok(ClusterMethod::Sc),
            "sc_lap" => Ok(ClusterMethod::ScLap),
            "rsc" => Ok(ClusterMethod::Rsc),
            "rsc_lap" => Ok(ClusterMethod::RscLap),
            "basc" => Ok(ClusterMethod::Basc),
            other => Err(Error::InvalidParams(format!("unknown method {other:?}"))),
        }
    }
}

/// Solver and k-means knobs; the defaults are used throughout the harness.
#[derive(Debug, Clone)]
pub struct SpectralParams {
    pub eig_tol: f64,
    pub eig_max_iter: usize,
    pub kmeans_restarts: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    /// Laplacian regularizer tau; `None` means the subgraph mean degree.
    pub regularizer: Option<f64>,
}

impl Default for SpectralParams {
    fn default() -> Self {
        Self {
            eig_tol: 1e-8,
            eig_max_iter: 600,
            kmeans_restarts: 10,
            kmeans_max_iter: 100,
            kmeans_tol: 1e-6,
            regularizer: None,
        }
    }
}

/// Clusters the nodes of S into `k` communities. Returns labels indexed by
/// position within the sorted S list.
pub fn spectral_cluster(
    g: &SparseGraph,
    s: &SubsampleIndex,
    k: usize,
    method: ClusterMethod,
    params: &SpectralParams,
    seed: u64,
) -> Result<Membership> {
    let m = s.m();
    if k == 0 || m < k {
        return Err(Error::InvalidParams(format!(
            "need k >= 1 and |S| >= k, got k={k}, |S|={m}"
        )));
    }
    let eig_seed = derive_seed(seed, 1);
    let embedding = match method {
        ClusterMethod::Sc | ClusterMethod::Rsc => {
            let sub = g.induced_subgraph(s.s())?;
            topk_eig(
                &adjacency_op(&sub),
                k,
                params.eig_tol,
                params.eig_max_iter,
                eig_seed,
            )?
        }
        ClusterMethod::ScLap | ClusterMethod::RscLap => {
            let sub = g.induced_subgraph(s.s())?;
            topk_eig(
                &laplacian_op(&sub, params.regularizer),
                k,
                params.eig_tol,
                params.eig_max_iter,
                eig_seed,
            )?
        }
        ClusterMethod::Basc => {
            let all: Vec<u32> = (0..g.node_count() as u32).collect();
            let slice = g.rect_slice(&all, s.s())?;
            let degrees: Vec<f64> = s.s().iter().map(|&i| g.degree(i) as f64).collect();
            topk_eig(
                &basc_op(&slice, &degrees),
                k,
                params.eig_tol,
                params.eig_max_iter,
                eig_seed,
            )?
        }
    };

    let mut rows = embedding.rows().to_vec();
    if matches!(method, ClusterMethod::Rsc | ClusterMethod::RscLap) {
        // Row normalization; all-zero rows stay zero and co-cluster.
        for r in 0..m {
            let row = &mut rows[r * k..(r + 1) * k];
            let nrm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nrm > 0.0 {
                for x in row {
                    *x /= nrm;
                }
            }
        }
    }
    let km = kmeans(
        &rows,
        m,
        k,
        k,
        params.kmeans_restarts,
        params.kmeans_max_iter,
        params.kmeans_tol,
        derive_seed(seed, 2),
    )?;
    Membership::new(km.labels, k)
}
