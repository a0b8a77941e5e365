//! Synthetic block-model network generators.
//!
//! Both models draw each potential edge independently: under the plain
//! block model the probability depends only on the endpoint communities,
//! under the degree-corrected variant it is additionally multiplied by
//! per-node degree parameters and capped at 1. Labels are laid out
//! block-contiguously; edges are produced in O(edges) time by skipping
//! through each block's pair space with geometric jumps, which preserves
//! the exact product-Bernoulli distribution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::membership::Membership;

/// Symmetric K x K matrix of block link probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    k: usize,
    entries: Vec<f64>,
}

impl BlockMatrix {
    pub fn new(k: usize, entries: Vec<f64>) -> Result<Self> {
        if k == 0 || entries.len() != k * k {
            return Err(Error::InvalidParams(format!(
                "expected {k}x{k} entries, got {}",
                entries.len()
            )));
        }
        for r in 0..k {
            for s in 0..k {
                let p = entries[r * k + s];
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidParams(format!(
                        "entry ({r}, {s}) = {p} outside [0, 1]"
                    )));
                }
                if entries[r * k + s] != entries[s * k + r] {
                    return Err(Error::InvalidParams("matrix must be symmetric".into()));
                }
            }
        }
        Ok(Self { k, entries })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, r: usize, s: usize) -> f64 {
        self.entries[r * self.k + s]
    }
}

/// Homophily-parameterized block matrix: diagonal `a*K*h / (h + K - 1)`,
/// off-diagonal `a*K / (h + K - 1)`. The diagonal/off-diagonal ratio is `h`
/// and the average entry under balanced communities is `a`.
pub fn sbm_block_matrix(k: usize, alpha: f64, h: f64) -> Result<BlockMatrix> {
    if k == 0 || h <= 0.0 || !(0.0 < alpha && alpha <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "need k >= 1, h > 0, alpha in (0, 1]; got k={k}, alpha={alpha}, h={h}"
        )));
    }
    let denom = h + (k as f64 - 1.0);
    let diag = alpha * k as f64 * h / denom;
    let off = alpha * k as f64 / denom;
    if diag > 1.0 || off > 1.0 {
        return Err(Error::InvalidParams(format!(
            "entries exceed 1 (diag={diag}, off={off})"
        )));
    }
    let mut entries = vec![off; k * k];
    for r in 0..k {
        entries[r * k + r] = diag;
    }
    BlockMatrix::new(k, entries)
}

/// Base matrix for the degree-corrected model: `a` on the diagonal and
/// `a/h` off it, before the global density scaling.
pub fn dcbm_block_matrix(k: usize, alpha: f64, h: f64) -> Result<BlockMatrix> {
    if k == 0 || h <= 0.0 || !(0.0 < alpha && alpha <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "need k >= 1, h > 0, alpha in (0, 1]; got k={k}, alpha={alpha}, h={h}"
        )));
    }
    let off = alpha / h;
    let mut entries = vec![off; k * k];
    for r in 0..k {
        entries[r * k + r] = alpha;
    }
    BlockMatrix::new(k, entries)
}

/// Per-node degree parameters of a degree-corrected model, normalized so
/// every community's maximum is exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeParams {
    theta: Vec<f64>,
}

impl DegreeParams {
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
}

/// Splits `n` into community sizes proportional to `proportions` using
/// largest-remainder rounding; deterministic and sums exactly to `n`.
pub fn community_sizes(n: usize, proportions: &[f64]) -> Result<Vec<usize>> {
    if proportions.is_empty() {
        return Err(Error::InvalidParams("proportions must be nonempty".into()));
    }
    let total: f64 = proportions.iter().sum();
    if proportions.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParams(format!(
            "proportions must be nonnegative and sum to 1 (sum={total})"
        )));
    }
    let quotas: Vec<f64> = proportions.iter().map(|&p| p * n as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|&q| q.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..proportions.len()).collect();
    // Largest fractional part first; ties broken by community index.
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &idx in order.iter().take(n - assigned) {
        sizes[idx] += 1;
    }
    Ok(sizes)
}

pub fn balanced_proportions(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

/// Samples a block-model graph: labels assigned block-contiguously, then
/// every pair `i < j` linked independently with probability
/// `omega[c_i][c_j]`. Bit-reproducible for a fixed seed.
pub fn sample_sbm(
    n: usize,
    omega: &BlockMatrix,
    proportions: &[f64],
    seed: u64,
) -> Result<(SparseGraph, Membership)> {
    if proportions.len() != omega.k() {
        return Err(Error::InvalidParams(
            "proportions length must equal K".into(),
        ));
    }
    let sizes = community_sizes(n, proportions)?;
    let labels = contiguous_labels(&sizes);
    let offsets = offsets_of(&sizes);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut edges = Vec::new();
    for a in 0..omega.k() {
        for b in a..omega.k() {
            let p = omega.get(a, b);
            sample_block_pair(
                &mut rng,
                offsets[a],
                sizes[a],
                offsets[b],
                sizes[b],
                a == b,
                p,
                |_, _, _| true,
                &mut edges,
            );
        }
    }
    let g = SparseGraph::from_edges(Some(n), &edges)?;
    let membership = Membership::new(labels, omega.k())?;
    Ok((g, membership))
}

/// Samples a degree-corrected graph with Beta-distributed degree
/// parameters. Theta draws are renormalized so each community's maximum is
/// 1, the base matrix is scaled so the pre-cap expected density hits
/// `density_target`, and pair probabilities above 1 are capped (which
/// leaves the realized density slightly below the target).
pub fn sample_dcbm(
    n: usize,
    omega0: &BlockMatrix,
    proportions: &[f64],
    density_target: f64,
    theta_shape: (f64, f64),
    seed: u64,
) -> Result<(SparseGraph, Membership, DegreeParams)> {
    let beta = Beta::new(theta_shape.0, theta_shape.1)
        .map_err(|e| Error::InvalidParams(format!("invalid theta shape: {e}")))?;
    // Separate stream for the degree parameters so the edge draws below
    // stay independent of theta.
    let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::derive_seed(seed, 0x7e7a));
    let theta: Vec<f64> = (0..n)
        .map(|_| beta.sample(&mut rng).max(f64::MIN_POSITIVE))
        .collect();
    sample_dcbm_with_theta(n, omega0, proportions, density_target, theta, seed)
}

/// Degree-corrected sampling with caller-supplied theta values (one per
/// node, in (0, 1]); used directly by tests that pin theta.
pub fn sample_dcbm_with_theta(
    n: usize,
    omega0: &BlockMatrix,
    proportions: &[f64],
    density_target: f64,
    mut theta: Vec<f64>,
    seed: u64,
) -> Result<(SparseGraph, Membership, DegreeParams)> {
    let k = omega0.k();
    if proportions.len() != k {
        return Err(Error::InvalidParams(
            "proportions length must equal K".into(),
        ));
    }
    if !(0.0..1.0).contains(&density_target) {
        return Err(Error::InvalidParams(format!(
            "density target {density_target} outside [0, 1)"
        )));
    }
    if theta.len() != n || theta.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::InvalidParams(
            "theta must hold n values in (0, 1]".into(),
        ));
    }
    let sizes = community_sizes(n, proportions)?;
    let offsets = offsets_of(&sizes);
    let labels = contiguous_labels(&sizes);

    // Identifiability: max theta within each community becomes exactly 1.
    for c in 0..k {
        let range = offsets[c]..offsets[c] + sizes[c];
        let max = theta[range.clone()].iter().cloned().fold(0.0f64, f64::max);
        if max > 0.0 {
            for t in &mut theta[range] {
                *t /= max;
            }
        }
    }

    // Closed-form pre-cap scale: sum_{i<j} s*theta_i*theta_j*omega0 equals
    // the target edge count. Within-block pair mass is (T^2 - Q) / 2.
    let mut t_sum = vec![0.0f64; k];
    let mut q_sum = vec![0.0f64; k];
    for c in 0..k {
        for i in offsets[c]..offsets[c] + sizes[c] {
            t_sum[c] += theta[i];
            q_sum[c] += theta[i] * theta[i];
        }
    }
    let mut mass = 0.0f64;
    for a in 0..k {
        mass += omega0.get(a, a) * (t_sum[a] * t_sum[a] - q_sum[a]) / 2.0;
        for b in (a + 1)..k {
            mass += omega0.get(a, b) * t_sum[a] * t_sum[b];
        }
    }
    let target_edges = density_target * n as f64 * (n as f64 - 1.0) / 2.0;
    let scale = if mass > 0.0 { target_edges / mass } else { 0.0 };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for a in 0..k {
        for b in a..k {
            let p_max = (scale * omega0.get(a, b)).min(1.0);
            sample_block_pair(
                &mut rng,
                offsets[a],
                sizes[a],
                offsets[b],
                sizes[b],
                a == b,
                p_max,
                |rng, u, v| {
                    let p_edge =
                        (scale * theta[u as usize] * theta[v as usize] * omega0.get(a, b)).min(1.0);
                    // Candidates arrive at rate p_max >= p_edge; thin to the
                    // exact per-pair probability. No draw when equal, so a
                    // constant theta of 1 reproduces the plain model stream.
                    p_edge >= p_max || rng.random::<f64>() * p_max < p_edge
                },
                &mut edges,
            );
        }
    }
    let g = SparseGraph::from_edges(Some(n), &edges)?;
    let membership = Membership::new(labels, k)?;
    Ok((g, membership, DegreeParams { theta }))
}

fn contiguous_labels(sizes: &[usize]) -> Vec<u32> {
    let mut labels = Vec::with_capacity(sizes.iter().sum());
    for (c, &s) in sizes.iter().enumerate() {
        labels.extend(std::iter::repeat_n(c as u32, s));
    }
    labels
}

fn offsets_of(sizes: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(sizes.len());
    let mut acc = 0;
    for &s in sizes {
        offsets.push(acc);
        acc += s;
    }
    offsets
}

/// Number of failures before the next success in a Bernoulli(p) stream.
fn geometric_skip<R: Rng>(rng: &mut R, p: f64) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    let u = 1.0 - rng.random::<f64>(); // in (0, 1]
    let skip = u.ln() / (1.0 - p).ln();
    if skip >= u64::MAX as f64 {
        u64::MAX
    } else {
        skip as u64
    }
}

/// Walks the candidate pairs of one block pair in a fixed linear order.
enum PairWalker {
    /// Unordered pairs {i, j}, i < j, inside one block of `size` nodes.
    Within { i: u64, j: u64, size: u64 },
    /// Cross product of two disjoint blocks.
    Cross {
        i: u64,
        j: u64,
        rows: u64,
        cols: u64,
    },
}

impl PairWalker {
    fn start(within: bool, rows: u64, cols: u64) -> Self {
        if within {
            PairWalker::Within {
                i: 0,
                j: 1,
                size: rows,
            }
        } else {
            PairWalker::Cross {
                i: 0,
                j: 0,
                rows,
                cols,
            }
        }
    }

    /// Moves `by` pairs forward; returns the pair now under the cursor, or
    /// None once the space is exhausted.
    fn advance(&mut self, by: u64) -> Option<(u64, u64)> {
        match self {
            PairWalker::Within { i, j, size } => {
                if *size < 2 || *i >= *size - 1 {
                    return None;
                }
                *j = j.checked_add(by)?;
                while *j >= *size {
                    let over = *j - *size;
                    *i += 1;
                    if *i >= *size - 1 {
                        return None;
                    }
                    *j = *i + 1 + over;
                }
                Some((*i, *j))
            }
            PairWalker::Cross { i, j, rows, cols } => {
                if *rows == 0 || *cols == 0 || *i >= *rows {
                    return None;
                }
                *j = j.checked_add(by)?;
                *i += *j / *cols;
                *j %= *cols;
                if *i >= *rows {
                    None
                } else {
                    Some((*i, *j))
                }
            }
        }
    }
}

/// Emits the edges of one block pair: candidates appear with probability
/// `p`, in linear pair order, and `thin` may reject each one.
#[allow(clippy::too_many_arguments)]
fn sample_block_pair<R: Rng>(
    rng: &mut R,
    off_a: usize,
    size_a: usize,
    off_b: usize,
    size_b: usize,
    within: bool,
    p: f64,
    mut thin: impl FnMut(&mut R, u32, u32) -> bool,
    edges: &mut Vec<(u32, u32)>,
) {
    if p <= 0.0 {
        return;
    }
    let mut walker = PairWalker::start(within, size_a as u64, size_b as u64);
    let mut step = geometric_skip(rng, p);
    while let Some((i, j)) = walker.advance(step) {
        let u = (off_a as u64 + i) as u32;
        let v = (off_b as u64 + j) as u32;
        if thin(rng, u, v) {
            edges.push((u, v));
        }
        step = geometric_skip(rng, p) + 1;
    }
}
