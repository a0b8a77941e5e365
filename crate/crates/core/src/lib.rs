//! Predictive assignment for scalable community detection in large sparse
//! networks.
//!
//! Full-network clustering is replaced by three steps: sample a small node
//! subset, cluster the subgraph it spans and estimate a structural link
//! parameter from it, then assign every remaining node independently with
//! cheap vector computations. The crate bundles block-model generators,
//! spectral clustering variants for the subgraph step, the assignment rules
//! for both models, error metrics with optimal label matching, and a
//! benchmark harness that drives everything from flat config files.

pub mod assign;
pub mod blockmodel;
pub mod error;
pub mod graph;
pub mod harness;
pub mod mem;
pub mod membership;
pub mod metrics;
pub mod sampling;
pub mod seed;
pub mod spectral;

pub use assign::{predictive_assign, Model, PipelineConfig, PipelineOutput};
pub use blockmodel::{BlockMatrix, DegreeParams};
pub use error::{Error, Result};
pub use graph::{RectSlice, SparseGraph};
pub use membership::Membership;
pub use metrics::ErrorReport;
pub use sampling::{Sampler, SubsampleIndex};
pub use spectral::ClusterMethod;
