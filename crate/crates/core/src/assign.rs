//! Structural-link estimation and per-node predictive assignment.
//!
//! After the subgraph is clustered, each node outside the sample is
//! assigned independently: under the plain block model by the closest
//! estimated mean-connectivity column, under the degree-corrected model by
//! the closest normalized block-popularity profile. Both rules read only
//! immutable shared state per node, so the loop parallelizes freely.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::mem;
use crate::membership::Membership;
use crate::metrics::ErrorReport;
use crate::sampling::{random_walk_sample_with_stats, srs, RwsStats, Sampler, SubsampleIndex};
use crate::seed::derive_seed;
use crate::spectral::{spectral_cluster, ClusterMethod, SpectralParams};

/// Estimated mean connectivity of each out-of-sample node to each
/// estimated community, kept as integer edge counts over community sizes
/// so comparisons stay exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThetaHat {
    rows: usize,
    k: usize,
    /// Row-major `rows x k`: edges from complement node (by position) into
    /// each estimated community.
    counts: Vec<u32>,
    /// Estimated community sizes, all positive.
    sizes: Vec<u32>,
    /// Per-column sums of squared counts, cached for the assignment rule.
    col_sq: Vec<i128>,
}

impl ThetaHat {
    pub fn from_parts(rows: usize, k: usize, counts: Vec<u32>, sizes: Vec<u32>) -> Result<Self> {
        if sizes.len() != k || counts.len() != rows * k {
            return Err(Error::InvalidParams("inconsistent dimensions".into()));
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::EmptyEstimatedCommunity(empty));
        }
        for (idx, &c) in counts.iter().enumerate() {
            if c > sizes[idx % k] {
                return Err(Error::InvalidParams(format!(
                    "count {c} exceeds community size {}",
                    sizes[idx % k]
                )));
            }
        }
        let mut col_sq = vec![0i128; k];
        for row in counts.chunks_exact(k) {
            for (acc, &c) in col_sq.iter_mut().zip(row) {
                *acc += (c as i128) * (c as i128);
            }
        }
        Ok(Self {
            rows,
            k,
            counts,
            sizes,
            col_sq,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn count(&self, row: usize, k: usize) -> u32 {
        self.counts[row * self.k + k]
    }

    pub fn size(&self, k: usize) -> u32 {
        self.sizes[k]
    }

    /// The estimated entry as a float; exact arithmetic is used internally.
    pub fn value(&self, row: usize, k: usize) -> f64 {
        self.count(row, k) as f64 / self.sizes[k] as f64
    }
}

/// Estimates the mean-connectivity matrix: entry (i, k) is the number of
/// edges from the i-th complement node into estimated community k, over
/// that community's size. Fails if any estimated community is empty,
/// since the size matrix must be invertible.
pub fn estimate_theta(
    g: &SparseGraph,
    s: &SubsampleIndex,
    labels_s: &Membership,
) -> Result<ThetaHat> {
    let k = labels_s.k();
    check_subgraph_labels(s, labels_s)?;
    let sizes_usize = labels_s.community_sizes();
    if let Some(empty) = sizes_usize.iter().position(|&c| c == 0) {
        return Err(Error::EmptyEstimatedCommunity(empty));
    }
    let sizes: Vec<u32> = sizes_usize.iter().map(|&c| c as u32).collect();
    let label_of = label_lookup(g.node_count(), s, labels_s);

    let rows = s.complement().len();
    let mut counts = vec![0u32; rows * k];
    for (row, &node) in s.complement().iter().enumerate() {
        let slot = &mut counts[row * k..(row + 1) * k];
        for &v in g.neighbors(node) {
            let l = label_of[v as usize];
            if l != u32::MAX {
                slot[l as usize] += 1;
            }
        }
    }
    ThetaHat::from_parts(rows, k, counts, sizes)
}

/// Assigns every complement node to the community whose estimated
/// connectivity column is nearest to the node's adjacency over the
/// complement. The squared distance is expanded so each node touches only
/// its own neighbor list: `||col_k||^2 - 2 <a_j, col_k>`, with the
/// node-constant term dropped. Comparisons are exact integer arithmetic,
/// so the argmin matches the literal dense rule on every instance; ties go
/// to the lowest community index. Labels are returned by complement
/// position.
pub fn closest_community_assign(
    g: &SparseGraph,
    s: &SubsampleIndex,
    theta: &ThetaHat,
) -> Result<Vec<u32>> {
    if theta.rows() != s.complement().len() {
        return Err(Error::InvalidParams(
            "estimate does not match the subsample".into(),
        ));
    }
    let k = theta.k();
    let labels: Vec<u32> = s
        .complement()
        .par_iter()
        .map(|&node| {
            // Neighbor-count inner products against each column.
            let mut nbsum = vec![0i128; k];
            for &v in g.neighbors(node) {
                if let Some(row) = s.pos_in_complement(v) {
                    for (acc, c) in nbsum.iter_mut().zip(0..k) {
                        *acc += theta.count(row, c) as i128;
                    }
                }
            }
            // score_k = colsq_k / s_k^2 - 2 * nbsum_k / s_k, compared via
            // cross-multiplication with the positive denominators s_k^2.
            let num =
                |c: usize| -> i128 { theta.col_sq[c] - 2 * (theta.sizes[c] as i128) * nbsum[c] };
            let den = |c: usize| -> i128 {
                let s = theta.sizes[c] as i128;
                s * s
            };
            let mut best = 0usize;
            for c in 1..k {
                if num(c) * den(best) < num(best) * den(c) {
                    best = c;
                }
            }
            best as u32
        })
        .collect();
    Ok(labels)
}

/// Within-subgraph edge counts between estimated communities: the
/// quadratic form of the subgraph adjacency in the estimated membership
/// indicators, so each within-community edge counts twice on the diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmegaHat {
    k: usize,
    counts: Vec<u64>,
}

impl OmegaHat {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, a: usize, b: usize) -> u64 {
        self.counts[a * self.k + b]
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.k)
            .map(|a| self.counts[a * self.k..(a + 1) * self.k].iter().sum())
            .collect()
    }
}

/// One pass over the subgraph's stored entries; both directions of an
/// edge contribute, which matches the quadratic form exactly.
pub fn estimate_omega(
    g: &SparseGraph,
    s: &SubsampleIndex,
    labels_s: &Membership,
) -> Result<OmegaHat> {
    let k = labels_s.k();
    check_subgraph_labels(s, labels_s)?;
    let label_of = label_lookup(g.node_count(), s, labels_s);
    let mut counts = vec![0u64; k * k];
    for (pos, &u) in s.s().iter().enumerate() {
        let lu = labels_s.label(pos) as usize;
        for &v in g.neighbors(u) {
            let lv = label_of[v as usize];
            if lv != u32::MAX {
                counts[lu * k + lv as usize] += 1;
            }
        }
    }
    Ok(OmegaHat { k, counts })
}

/// Assigns every complement node to the community whose normalized
/// popularity row is nearest to the node's own edge-share profile over
/// the subgraph. Nodes with no edges into S take the largest estimated
/// community; the count of such fallbacks is returned alongside.
pub fn node_popularity_assign(
    g: &SparseGraph,
    s: &SubsampleIndex,
    labels_s: &Membership,
    omega: &OmegaHat,
) -> Result<(Vec<u32>, u64)> {
    let k = omega.k();
    check_subgraph_labels(s, labels_s)?;
    let row_sums = omega.row_sums();
    if let Some(dead) = row_sums.iter().position(|&r| r == 0) {
        return Err(Error::DisconnectedEstimatedCommunity(dead));
    }
    // Normalized block profiles, one row per community.
    let profiles: Vec<f64> = (0..k)
        .flat_map(|a| {
            let total = row_sums[a] as f64;
            (0..k).map(move |b| (a, b, total))
        })
        .map(|(a, b, total)| omega.get(a, b) as f64 / total)
        .collect();

    let fallback = largest_community(labels_s);
    let label_of = label_lookup(g.node_count(), s, labels_s);

    let labels: Vec<u32> = s
        .complement()
        .par_iter()
        .map(|&node| {
            let mut counts = vec![0u64; k];
            for &v in g.neighbors(node) {
                let l = label_of[v as usize];
                if l != u32::MAX {
                    counts[l as usize] += 1;
                }
            }
            let degree_into_s: u64 = counts.iter().sum();
            if degree_into_s == 0 {
                return fallback;
            }
            let d = degree_into_s as f64;
            let mut best = 0usize;
            let mut best_dist = f64::INFINITY;
            for a in 0..k {
                let mut dist = 0.0;
                for b in 0..k {
                    let diff = counts[b] as f64 / d - profiles[a * k + b];
                    dist += diff * diff;
                }
                if dist < best_dist {
                    best_dist = dist;
                    best = a;
                }
            }
            best as u32
        })
        .collect();

    let fallbacks = s
        .complement()
        .iter()
        .filter(|&&node| {
            g.neighbors(node)
                .iter()
                .all(|&v| label_of[v as usize] == u32::MAX)
        })
        .count() as u64;
    Ok((labels, fallbacks))
}

fn largest_community(labels_s: &Membership) -> u32 {
    let sizes = labels_s.community_sizes();
    let mut best = 0usize;
    for (c, &size) in sizes.iter().enumerate() {
        if size > sizes[best] {
            best = c;
        }
    }
    best as u32
}

fn check_subgraph_labels(s: &SubsampleIndex, labels_s: &Membership) -> Result<()> {
    if labels_s.len() != s.m() {
        return Err(Error::InvalidParams(format!(
            "subgraph labels cover {} nodes but |S| = {}",
            labels_s.len(),
            s.m()
        )));
    }
    Ok(())
}

/// Node label lookup over the full graph: labels for S nodes, sentinel
/// elsewhere.
fn label_lookup(n: usize, s: &SubsampleIndex, labels_s: &Membership) -> Vec<u32> {
    let mut label_of = vec![u32::MAX; n];
    for (pos, &node) in s.s().iter().enumerate() {
        label_of[node as usize] = labels_s.label(pos);
    }
    label_of
}

/// Which structural-link rule Step 3 applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Sbm,
    Dcbm,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Sbm => "sbm",
            Model::Dcbm => "dcbm",
        }
    }
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sbm" => Ok(Model::Sbm),
            "dcbm" => Ok(Model::Dcbm),
            other => Err(Error::InvalidParams(format!("unknown model {other:?}"))),
        }
    }
}

/// Full pipeline configuration for one run.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub model: Model,
    pub sampler: Sampler,
    pub m: usize,
    pub method: ClusterMethod,
    pub seed: u64,
    /// Worker threads for the per-node assignment loop; 0 uses the rayon
    /// default. Results are identical for every value.
    pub threads: usize,
    pub spectral: SpectralParams,
}

/// Labels for every node plus the sample and per-step counters.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub membership: Membership,
    pub subsample: SubsampleIndex,
    pub report: ErrorReport,
}

/// Runs the three steps end to end: sample, cluster-and-estimate, assign.
/// In-sample nodes keep their subgraph labels; the rest are assigned
/// independently in parallel.
pub fn predictive_assign(
    g: &SparseGraph,
    k: usize,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput> {
    let n = g.node_count();
    if k == 0 {
        return Err(Error::InvalidParams("k must be at least 1".into()));
    }
    let total_start = Instant::now();

    let step = Instant::now();
    let (s, rws_stats) = match cfg.sampler {
        Sampler::Srs => (
            srs(n, cfg.m, derive_seed(cfg.seed, 10))?,
            RwsStats::default(),
        ),
        Sampler::Rws => random_walk_sample_with_stats(g, cfg.m, derive_seed(cfg.seed, 10))?,
    };
    let t_sample_s = step.elapsed().as_secs_f64();

    let step = Instant::now();
    let labels_s = spectral_cluster(
        g,
        &s,
        k,
        cfg.method,
        &cfg.spectral,
        derive_seed(cfg.seed, 11),
    )?;
    enum Link {
        Theta(ThetaHat),
        Omega(OmegaHat),
    }
    let link = match cfg.model {
        Model::Sbm => Link::Theta(estimate_theta(g, &s, &labels_s)?),
        Model::Dcbm => Link::Omega(estimate_omega(g, &s, &labels_s)?),
    };
    let t_cluster_s = step.elapsed().as_secs_f64();

    let step = Instant::now();
    let mut fallback_count = 0u64;
    let assigned: Vec<u32> = if s.complement().is_empty() {
        Vec::new()
    } else {
        let mut work = || -> Result<Vec<u32>> {
            match &link {
                Link::Theta(theta) => closest_community_assign(g, &s, theta),
                Link::Omega(omega) => {
                    let (labels, fallbacks) = node_popularity_assign(g, &s, &labels_s, omega)?;
                    fallback_count = fallbacks;
                    Ok(labels)
                }
            }
        };
        if cfg.threads == 0 {
            work()?
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.threads)
                .build()
                .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
            pool.install(&mut work)?
        }
    };
    let t_assign_s = step.elapsed().as_secs_f64();

    let mut full = vec![0u32; n];
    for (pos, &node) in s.s().iter().enumerate() {
        full[node as usize] = labels_s.label(pos);
    }
    for (pos, &node) in s.complement().iter().enumerate() {
        full[node as usize] = assigned[pos];
    }

    let report = ErrorReport {
        n,
        m: s.m(),
        fallback_count,
        srs_fill_count: rws_stats.srs_fill as u64,
        t_sample_s,
        t_cluster_s,
        t_assign_s,
        t_total_s: total_start.elapsed().as_secs_f64(),
        peak_mem_bytes: mem::peak_bytes(),
        ..ErrorReport::default()
    };
    Ok(PipelineOutput {
        membership: Membership::new(full, k)?,
        subsample: s,
        report,
    })
}
