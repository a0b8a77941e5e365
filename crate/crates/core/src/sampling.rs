//! Node subsample selection: uniform random sampling and random-walk
//! sampling. Both are pure functions of their inputs and a seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;

/// A selected node subset S with its complement and position maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsampleIndex {
    s: Vec<u32>,
    complement: Vec<u32>,
    pos_in_s: Vec<u32>,
    pos_in_comp: Vec<u32>,
}

impl SubsampleIndex {
    /// Builds the index from a distinct node set; `nodes` may arrive in any
    /// order and is sorted internally.
    pub fn new(n: usize, mut nodes: Vec<u32>) -> Result<Self> {
        nodes.sort_unstable();
        if nodes.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParams("duplicate node in subsample".into()));
        }
        if let Some(&last) = nodes.last() {
            if last as usize >= n {
                return Err(Error::IndexOutOfRange {
                    index: last as usize,
                    len: n,
                });
            }
        }
        let mut pos_in_s = vec![u32::MAX; n];
        for (pos, &v) in nodes.iter().enumerate() {
            pos_in_s[v as usize] = pos as u32;
        }
        let mut complement = Vec::with_capacity(n - nodes.len());
        let mut pos_in_comp = vec![u32::MAX; n];
        for v in 0..n as u32 {
            if pos_in_s[v as usize] == u32::MAX {
                pos_in_comp[v as usize] = complement.len() as u32;
                complement.push(v);
            }
        }
        Ok(Self {
            s: nodes,
            complement,
            pos_in_s,
            pos_in_comp,
        })
    }

    pub fn n(&self) -> usize {
        self.pos_in_s.len()
    }

    pub fn m(&self) -> usize {
        self.s.len()
    }

    /// Selected nodes, sorted ascending.
    pub fn s(&self) -> &[u32] {
        &self.s
    }

    /// Unselected nodes, sorted ascending.
    pub fn complement(&self) -> &[u32] {
        &self.complement
    }

    pub fn contains(&self, node: u32) -> bool {
        self.pos_in_s[node as usize] != u32::MAX
    }

    /// Position of `node` within the sorted S list, if selected.
    pub fn pos_in_s(&self, node: u32) -> Option<usize> {
        match self.pos_in_s[node as usize] {
            u32::MAX => None,
            p => Some(p as usize),
        }
    }

    /// Position of `node` within the sorted complement list, if unselected.
    pub fn pos_in_complement(&self, node: u32) -> Option<usize> {
        match self.pos_in_comp[node as usize] {
            u32::MAX => None,
            p => Some(p as usize),
        }
    }
}

/// Subsampling scheme for Step 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampler {
    Srs,
    Rws,
}

impl std::str::FromStr for Sampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "srs" => Ok(Sampler::Srs),
            "rws" => Ok(Sampler::Rws),
            other => Err(Error::InvalidParams(format!("unknown sampler {other:?}"))),
        }
    }
}

/// Counters describing how a random-walk sample was completed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RwsStats {
    /// Nodes added by the uniform fill after the walk step budget ran out.
    pub srs_fill: usize,
    /// Fresh uniform restarts (isolated node or stall).
    pub restarts: usize,
    pub steps: usize,
}

/// Uniformly random m-subset of `0..n`: partial Fisher-Yates, so every
/// subset is equiprobable. Deterministic for a fixed seed.
pub fn srs(n: usize, m: usize, seed: u64) -> Result<SubsampleIndex> {
    check_m(n, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<u32> = (0..n as u32).collect();
    for i in 0..m {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(m);
    SubsampleIndex::new(n, pool)
}

/// Random-walk sample: start at a uniform node, repeatedly move to a
/// uniform neighbor, and collect every visited node until m distinct nodes
/// are found. The walk restarts from a fresh uniform node at an isolated
/// node or after `50*m` steps without progress; after `500*m` total steps
/// the remainder is filled uniformly from the unvisited nodes.
pub fn random_walk_sample(g: &SparseGraph, m: usize, seed: u64) -> Result<SubsampleIndex> {
    random_walk_sample_with_stats(g, m, seed).map(|(index, _)| index)
}

pub fn random_walk_sample_with_stats(
    g: &SparseGraph,
    m: usize,
    seed: u64,
) -> Result<(SubsampleIndex, RwsStats)> {
    let n = g.node_count();
    check_m(n, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_sample = vec![false; n];
    let mut selected: Vec<u32> = Vec::with_capacity(m);
    let mut stats = RwsStats::default();

    let visit = |node: u32, in_sample: &mut [bool], selected: &mut Vec<u32>| -> bool {
        if in_sample[node as usize] {
            false
        } else {
            in_sample[node as usize] = true;
            selected.push(node);
            true
        }
    };

    let stall_limit = 50 * m;
    let step_limit = 500 * m;
    let mut current = rng.random_range(0..n) as u32;
    visit(current, &mut in_sample, &mut selected);
    let mut stalled = 0usize;

    while selected.len() < m && stats.steps < step_limit {
        stats.steps += 1;
        let needs_restart = g.degree(current) == 0 || stalled >= stall_limit;
        if needs_restart {
            stats.restarts += 1;
            stalled = 0;
            current = rng.random_range(0..n) as u32;
        } else {
            let nbrs = g.neighbors(current);
            current = nbrs[rng.random_range(0..nbrs.len())];
        }
        if visit(current, &mut in_sample, &mut selected) {
            stalled = 0;
        } else {
            stalled += 1;
        }
    }

    // Walk budget exhausted: complete the sample uniformly over the
    // remaining nodes so the contract |S| = m always holds.
    if selected.len() < m {
        let mut rest: Vec<u32> = (0..n as u32).filter(|&v| !in_sample[v as usize]).collect();
        let need = m - selected.len();
        for i in 0..need {
            let j = rng.random_range(i..rest.len());
            rest.swap(i, j);
        }
        stats.srs_fill = need;
        selected.extend_from_slice(&rest[..need]);
    }

    let index = SubsampleIndex::new(n, selected)?;
    Ok((index, stats))
}

fn check_m(n: usize, m: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(Error::InvalidParams(format!(
            "subsample size {m} outside 1..={n}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn star_graph(leaves: u32) -> SparseGraph {
        let edges: Vec<(u32, u32)> = (1..=leaves).map(|l| (0, l)).collect();
        SparseGraph::from_edges(None, &edges).unwrap()
    }

    fn complete_graph(n: u32) -> SparseGraph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                edges.push((u, v));
            }
        }
        SparseGraph::from_edges(Some(n as usize), &edges).unwrap()
    }

    #[test]
    fn srs_full_sample_is_everything() {
        let idx = srs(12, 12, 3).unwrap();
        assert_eq!(idx.s(), (0..12u32).collect::<Vec<_>>().as_slice());
        assert!(idx.complement().is_empty());
    }

    #[test]
    fn srs_is_deterministic() {
        assert_eq!(srs(10, 4, 7).unwrap(), srs(10, 4, 7).unwrap());
        assert_ne!(srs(10, 4, 7).unwrap(), srs(10, 4, 8).unwrap());
    }

    #[test]
    fn srs_rejects_oversized_m() {
        assert!(matches!(srs(3, 4, 0), Err(Error::InvalidParams(_))));
        assert!(matches!(srs(3, 0, 0), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn srs_single_draw_is_uniform() {
        let trials = 30_000;
        let mut counts = [0usize; 3];
        for seed in 0..trials {
            let idx = srs(3, 1, seed).unwrap();
            counts[idx.s()[0] as usize] += 1;
        }
        for &c in &counts {
            let freq = c as f64 / trials as f64;
            assert!(
                (freq - 1.0 / 3.0).abs() < 0.02 / 3.0,
                "frequency {freq} too far from 1/3"
            );
        }
    }

    #[test]
    fn srs_subsets_pass_chi_squared() {
        // n=6, m=3: all C(6,3)=20 subsets enumerable.
        let n = 6;
        let m = 3;
        let trials = 20_000usize;
        let mut counts = std::collections::HashMap::new();
        for seed in 0..trials as u64 {
            let idx = srs(n, m, seed).unwrap();
            *counts.entry(idx.s().to_vec()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 20);
        let expected = trials as f64 / 20.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // 0.999 quantile of chi-squared with 19 degrees of freedom.
        assert!(chi2 < 43.82, "chi-squared statistic {chi2} too large");
    }

    #[test]
    fn rws_complete_graph_collects_everything() {
        let g = complete_graph(8);
        for seed in [0, 1, 2, 3] {
            let idx = random_walk_sample(&g, 8, seed).unwrap();
            assert_eq!(idx.s(), (0..8u32).collect::<Vec<_>>().as_slice());
        }
    }

    #[test]
    fn rws_single_node_is_uniform_start() {
        let g = complete_graph(5);
        let mut counts = [0usize; 5];
        for seed in 0..10_000 {
            let idx = random_walk_sample(&g, 1, seed).unwrap();
            assert_eq!(idx.m(), 1);
            counts[idx.s()[0] as usize] += 1;
        }
        for &c in &counts {
            let freq = c as f64 / 10_000.0;
            assert!((freq - 0.2).abs() < 0.02);
        }
    }

    #[test]
    fn rws_prefers_the_hub() {
        let g = star_graph(9);
        let mut hub = 0usize;
        let mut leaf = 0usize;
        for seed in 0..10_000 {
            let idx = random_walk_sample(&g, 2, seed).unwrap();
            if idx.contains(0) {
                hub += 1;
            }
            if idx.contains(1) {
                leaf += 1;
            }
        }
        assert!(
            hub > 5 * leaf,
            "hub selected {hub} times vs leaf {leaf}; expected strong degree bias"
        );
    }

    #[test]
    fn rws_is_deterministic() {
        let g = complete_graph(20);
        assert_eq!(
            random_walk_sample(&g, 7, 123).unwrap(),
            random_walk_sample(&g, 7, 123).unwrap()
        );
    }

    #[test]
    fn rws_isolated_graph_falls_back_to_uniform_fill() {
        let g = SparseGraph::from_edges(Some(10), &[]).unwrap();
        let (idx, stats) = random_walk_sample_with_stats(&g, 6, 9).unwrap();
        assert_eq!(idx.m(), 6);
        assert!(stats.srs_fill > 0 || stats.restarts > 0);
    }

    #[test]
    fn rws_handles_disconnected_components() {
        // Two triangles; the walk cannot cross between them so collecting
        // 5 nodes needs restarts.
        let g = SparseGraph::from_edges(Some(6), &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
            .unwrap();
        let (idx, _) = random_walk_sample_with_stats(&g, 5, 4).unwrap();
        assert_eq!(idx.m(), 5);
    }

    proptest! {
        #[test]
        fn index_partitions_nodes(n in 1usize..200, seed in 0u64..500) {
            let m = 1 + (seed as usize % n);
            let idx = srs(n, m, seed).unwrap();
            prop_assert_eq!(idx.m(), m);
            prop_assert_eq!(idx.s().len() + idx.complement().len(), n);
            prop_assert!(idx.s().windows(2).all(|w| w[0] < w[1]));
            prop_assert!(idx.complement().windows(2).all(|w| w[0] < w[1]));
            for &v in idx.s() {
                prop_assert!(idx.contains(v));
                prop_assert_eq!(idx.s()[idx.pos_in_s(v).unwrap()], v);
                prop_assert!(idx.pos_in_complement(v).is_none());
            }
            for &v in idx.complement() {
                prop_assert!(!idx.contains(v));
                prop_assert_eq!(idx.complement()[idx.pos_in_complement(v).unwrap()], v);
            }
        }

        #[test]
        fn rws_always_reaches_m(seed in 0u64..300) {
            // A path graph is the slowest connected case for a walk.
            let edges: Vec<(u32, u32)> = (0..29).map(|i| (i, i + 1)).collect();
            let g = SparseGraph::from_edges(None, &edges).unwrap();
            let m = 1 + (seed as usize % 30);
            let idx = random_walk_sample(&g, m, seed).unwrap();
            prop_assert_eq!(idx.m(), m);
        }
    }
}
