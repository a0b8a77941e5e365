//! Sparse undirected graph storage in CSR form, plus the slicing and
//! neighbor-aggregation primitives the later pipeline stages consume.
//!
//! Graphs are simple (no self-loops, no multi-edges), unweighted, and
//! symmetric: every undirected edge is stored in both incident rows.
//! Node ids are 0-based `u32`, row offsets are 64-bit.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Symmetric CSR adjacency of an undirected simple graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseGraph {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
}

impl SparseGraph {
    /// Builds a graph from an undirected edge list. Self-loops are dropped,
    /// duplicates merged, and each surviving edge stored in both rows.
    ///
    /// `n` must be at least `1 + max node id`; pass `None` to infer it.
    pub fn from_edges(n: Option<usize>, edges: &[(u32, u32)]) -> Result<Self> {
        let inferred = edges
            .iter()
            .map(|&(u, v)| u.max(v) as usize + 1)
            .max()
            .unwrap_or(0);
        let n = match n {
            Some(n) if n < inferred => {
                return Err(Error::InvalidParams(format!(
                    "node count {n} smaller than 1 + max node id {}",
                    inferred - 1
                )))
            }
            Some(n) => n,
            None => inferred,
        };

        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u == v {
                continue;
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
        })
    }

    /// Parses a whitespace-separated edge list: one `u v` pair per line,
    /// 0-based ids. Lines starting with `#` or `%` are comments, except the
    /// optional header `# nodes=N` which fixes the node count. Self-loops
    /// are dropped, duplicates and reversed repeats merged.
    pub fn from_edge_list<R: BufRead>(reader: R) -> Result<Self> {
        let mut edges: Vec<(u32, u32)> = Vec::new();
        let mut n_override: Option<usize> = None;

        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let text = line.trim();
            if text.is_empty() {
                continue;
            }
            if let Some(rest) = text.strip_prefix('#').or_else(|| text.strip_prefix('%')) {
                if let Some(value) = rest.trim().strip_prefix("nodes=") {
                    let n: usize = value.trim().parse().map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("invalid node count {value:?}"),
                    })?;
                    n_override = Some(n);
                }
                continue;
            }
            let mut tokens = text.split_whitespace();
            let (u, v) = match (tokens.next(), tokens.next(), tokens.next()) {
                (Some(a), Some(b), None) => (parse_node(a, lineno)?, parse_node(b, lineno)?),
                _ => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("expected two node ids, got {text:?}"),
                    })
                }
            };
            edges.push((u, v));
        }

        if let Some(n) = n_override {
            if let Some(&(u, v)) = edges.iter().find(|&&(u, v)| u.max(v) as usize >= n) {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("edge ({u}, {v}) exceeds declared node count {n}"),
                });
            }
        }
        Self::from_edges(n_override, &edges)
    }

    /// Writes `# nodes=N` followed by one `u v` pair per undirected edge,
    /// with `u < v`. Re-ingesting the output reproduces the graph exactly.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# nodes={}", self.n)?;
        for u in 0..self.n {
            for &v in self.neighbors(u as u32) {
                if (u as u32) < v {
                    writeln!(w, "{u} {v}")?;
                }
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.col_idx.len() / 2
    }

    /// Number of stored CSR entries (twice the edge count).
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn degree(&self, i: u32) -> usize {
        let i = i as usize;
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    /// Neighbors of `i`, sorted ascending.
    pub fn neighbors(&self, i: u32) -> &[u32] {
        let i = i as usize;
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn mean_degree(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.nnz() as f64 / self.n as f64
        }
    }

    /// Subgraph spanned by `nodes` (sorted, distinct), relabeled to
    /// `0..nodes.len()` in the given order.
    pub fn induced_subgraph(&self, nodes: &[u32]) -> Result<SparseGraph> {
        let lookup = position_lookup(self.n, nodes)?;
        let mut row_ptr = Vec::with_capacity(nodes.len() + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for &u in nodes {
            for &v in self.neighbors(u) {
                let pos = lookup[v as usize];
                if pos != u32::MAX {
                    col_idx.push(pos);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseGraph {
            n: nodes.len(),
            row_ptr,
            col_idx,
        })
    }

    /// CSR view of the adjacency restricted to `rows` x `cols`, with column
    /// ids reindexed to positions within `cols`. No symmetry is implied.
    pub fn rect_slice(&self, rows: &[u32], cols: &[u32]) -> Result<RectSlice> {
        validate_sorted_distinct(self.n, rows)?;
        let lookup = position_lookup(self.n, cols)?;
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for &u in rows {
            for &v in self.neighbors(u) {
                let pos = lookup[v as usize];
                if pos != u32::MAX {
                    col_idx.push(pos);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(RectSlice {
            n_rows: rows.len(),
            n_cols: cols.len(),
            row_ptr,
            col_idx,
        })
    }

    /// Counts the neighbors of `i` inside each labeled group. `subset` is a
    /// sorted distinct node list and `labels[p]` is the group of
    /// `subset[p]`, with values below `k`. Neighbors outside `subset` are
    /// ignored, so the counts sum to at most `degree(i)`.
    pub fn group_counts(
        &self,
        i: u32,
        subset: &[u32],
        labels: &[u32],
        k: usize,
    ) -> Result<Vec<u32>> {
        if i as usize >= self.n {
            return Err(Error::IndexOutOfRange {
                index: i as usize,
                len: self.n,
            });
        }
        validate_sorted_distinct(self.n, subset)?;
        debug_assert_eq!(subset.len(), labels.len());
        let mut counts = vec![0u32; k];
        for &v in self.neighbors(i) {
            if let Ok(pos) = subset.binary_search(&v) {
                counts[labels[pos] as usize] += 1;
            }
        }
        Ok(counts)
    }

    /// Nodes of the largest connected component, sorted ascending, together
    /// with the induced subgraph over them. Ties go to the component with
    /// the smallest member id. Never applied implicitly by the pipeline.
    pub fn largest_component(&self) -> (SparseGraph, Vec<u32>) {
        let mut comp = vec![u32::MAX; self.n];
        let mut best: (usize, u32) = (0, 0);
        let mut next = 0u32;
        let mut queue = Vec::new();
        for start in 0..self.n as u32 {
            if comp[start as usize] != u32::MAX {
                continue;
            }
            let id = next;
            next += 1;
            comp[start as usize] = id;
            queue.clear();
            queue.push(start);
            let mut size = 0usize;
            while let Some(u) = queue.pop() {
                size += 1;
                for &v in self.neighbors(u) {
                    if comp[v as usize] == u32::MAX {
                        comp[v as usize] = id;
                        queue.push(v);
                    }
                }
            }
            if size > best.0 {
                best = (size, id);
            }
        }
        let nodes: Vec<u32> = (0..self.n as u32)
            .filter(|&u| comp[u as usize] == best.1)
            .collect();
        let sub = self
            .induced_subgraph(&nodes)
            .expect("component nodes are sorted and in range");
        (sub, nodes)
    }

    /// Relabels nodes through a bijection: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[u32]) -> Result<SparseGraph> {
        if perm.len() != self.n {
            return Err(Error::InvalidParams("permutation length mismatch".into()));
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p as usize >= self.n || seen[p as usize] {
                return Err(Error::InvalidParams("not a permutation".into()));
            }
            seen[p as usize] = true;
        }
        let mut edges = Vec::with_capacity(self.edge_count());
        for u in 0..self.n as u32 {
            for &v in self.neighbors(u) {
                if u < v {
                    edges.push((perm[u as usize], perm[v as usize]));
                }
            }
        }
        SparseGraph::from_edges(Some(self.n), &edges)
    }

    /// Checks the structural invariants: symmetry, no self-loops, and
    /// strictly increasing column ids per row.
    pub fn check_invariants(&self) -> Result<()> {
        if self.row_ptr.len() != self.n + 1 || self.row_ptr[0] != 0 {
            return Err(Error::InvalidParams("malformed row offsets".into()));
        }
        for u in 0..self.n as u32 {
            let row = self.neighbors(u);
            if !row.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidParams(format!(
                    "row {u} columns not strictly increasing"
                )));
            }
            for &v in row {
                if v == u {
                    return Err(Error::InvalidParams(format!("self-loop at {u}")));
                }
                if v as usize >= self.n || !self.has_edge(v, u) {
                    return Err(Error::InvalidParams(format!("asymmetric entry ({u}, {v})")));
                }
            }
        }
        Ok(())
    }
}

/// Rectangular CSR slice of an adjacency matrix; rows and columns are
/// positions within the row/column node lists used to build it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RectSlice {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
}

impl RectSlice {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Column positions present in row `r`, sorted ascending.
    pub fn row(&self, r: usize) -> &[u32] {
        &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]]
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[u32]> {
        (0..self.n_rows).map(move |r| self.row(r))
    }
}

fn parse_node(token: &str, line: usize) -> Result<u32> {
    let id: u64 = token.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid node id {token:?}"),
    })?;
    // Column indices are 32-bit; u32::MAX is reserved as a sentinel.
    if id >= u32::MAX as u64 {
        return Err(Error::Parse {
            line,
            msg: format!("node id {id} exceeds supported range"),
        });
    }
    Ok(id as u32)
}

fn validate_sorted_distinct(n: usize, nodes: &[u32]) -> Result<()> {
    if let Some(&last) = nodes.last() {
        if last as usize >= n {
            return Err(Error::IndexOutOfRange {
                index: last as usize,
                len: n,
            });
        }
    }
    if !nodes.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidParams(
            "node list must be sorted and distinct".into(),
        ));
    }
    Ok(())
}

/// Maps node id -> position within `nodes`, with `u32::MAX` for absent ids.
fn position_lookup(n: usize, nodes: &[u32]) -> Result<Vec<u32>> {
    validate_sorted_distinct(n, nodes)?;
    let mut lookup = vec![u32::MAX; n];
    for (pos, &v) in nodes.iter().enumerate() {
        lookup[v as usize] = pos as u32;
    }
    Ok(lookup)
}
