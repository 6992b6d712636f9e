//! Causal pretraining workbench.
//!
//! Generates synthetic multivariate time series with known lagged causal
//! graphs, trains small networks (MLP, unidirectional GRU) to map raw series
//! to window causal graphs, and scores them against correlation thresholding
//! and a Granger-style VAR baseline.

pub mod baselines;
pub mod error;
mod io;
pub mod nn;
pub mod seed;
pub mod semgen;
pub mod series;
pub mod stats;
pub mod training;

pub use error::{Error, Result};
pub use series::Series;
pub use stats::GraphScores;

