//! Per-node community labels.

use crate::error::{Error, Result};

/// Community labels for a set of nodes, with values in `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Membership {
    labels: Vec<u32>,
    k: usize,
}

impl Membership {
    pub fn new(labels: Vec<u32>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParams("k must be at least 1".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= k) {
            return Err(Error::InvalidParams(format!(
                "label {bad} out of range for k={k}"
            )));
        }
        Ok(Self { labels, k })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<u32> {
        self.labels
    }

    /// Number of nodes carrying each label.
    pub fn community_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    /// Applies a label permutation: label `l` becomes `perm[l]`.
    pub fn relabeled(&self, perm: &[u32]) -> Result<Self> {
        if perm.len() != self.k {
            return Err(Error::InvalidParams(
                "permutation length must equal k".into(),
            ));
        }
        let labels = self.labels.iter().map(|&l| perm[l as usize]).collect();
        Self::new(labels, self.k)
    }
}
