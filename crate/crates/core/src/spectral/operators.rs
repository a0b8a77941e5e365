//! Matrix-free symmetric operators over sparse graphs and slices.

use crate::graph::{RectSlice, SparseGraph};
use crate::spectral::eigen::SymmetricOperator;
use std::cell::RefCell;

/// Plain adjacency: `y = A x`.
pub struct AdjacencyOp<'a> {
    g: &'a SparseGraph,
}

pub fn adjacency_op(g: &SparseGraph) -> AdjacencyOp<'_> {
    AdjacencyOp { g }
}

impl SymmetricOperator for AdjacencyOp<'_> {
    fn dim(&self) -> usize {
        self.g.node_count()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for u in 0..self.g.node_count() {
            y[u] = self
                .g
                .neighbors(u as u32)
                .iter()
                .map(|&v| x[v as usize])
                .sum();
        }
    }
}

/// Degree-normalized adjacency with regularization:
/// `y = (D + tau I)^{-1/2} A (D + tau I)^{-1/2} x`.
pub struct LaplacianOp<'a> {
    g: &'a SparseGraph,
    scale: Vec<f64>,
}

/// `regularizer` is tau; `None` uses the mean degree. Rows whose scaled
/// degree is zero stay zero.
pub fn laplacian_op(g: &SparseGraph, regularizer: Option<f64>) -> LaplacianOp<'_> {
    let tau = regularizer.unwrap_or_else(|| g.mean_degree());
    assert!(tau >= 0.0, "regularizer must be nonnegative");
    let scale = (0..g.node_count() as u32)
        .map(|i| {
            let d = g.degree(i) as f64 + tau;
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    LaplacianOp { g, scale }
}

impl SymmetricOperator for LaplacianOp<'_> {
    fn dim(&self) -> usize {
        self.g.node_count()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for u in 0..self.g.node_count() {
            let acc: f64 = self
                .g
                .neighbors(u as u32)
                .iter()
                .map(|&v| x[v as usize] * self.scale[v as usize])
                .sum();
            y[u] = acc * self.scale[u];
        }
    }
}

/// Bias-adjusted operator `y = T' (T x) - D_S x` where `T` is the
/// all-rows-by-S slice of the adjacency and `D_S` holds the full-graph
/// degrees of the S nodes. The product is never materialized: each apply
/// is two passes over the slice.
pub struct BascOp<'a> {
    slice: &'a RectSlice,
    degrees: Vec<f64>,
    scratch: RefCell<Vec<f64>>,
}

pub fn basc_op<'a>(slice: &'a RectSlice, degrees_s: &[f64]) -> BascOp<'a> {
    assert_eq!(degrees_s.len(), slice.n_cols());
    BascOp {
        slice,
        degrees: degrees_s.to_vec(),
        scratch: RefCell::new(vec![0.0; slice.n_rows()]),
    }
}

impl SymmetricOperator for BascOp<'_> {
    fn dim(&self) -> usize {
        self.slice.n_cols()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut tmp = self.scratch.borrow_mut();
        for (w, row) in self.slice.rows_iter().enumerate() {
            tmp[w] = row.iter().map(|&c| x[c as usize]).sum();
        }
        for (yc, (&d, &xc)) in y.iter_mut().zip(self.degrees.iter().zip(x)) {
            *yc = -d * xc;
        }
        for (w, row) in self.slice.rows_iter().enumerate() {
            let t = tmp[w];
            if t != 0.0 {
                for &c in row {
                    y[c as usize] += t;
                }
            }
        }
    }
}
