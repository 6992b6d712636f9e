//! Statistical primitives shared by the baselines, the networks and
//! evaluation.

mod auroc;
mod correlation;
mod graph;

pub use auroc::{auroc, dataset_auroc, AurocSummary, Pooling};
pub use correlation::{corr_features, lcc, pearson};
pub use graph::{summary_graph, GraphScores};
