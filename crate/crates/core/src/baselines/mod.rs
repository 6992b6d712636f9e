//! Classical reference methods: correlation thresholding and a linear
//! Granger-style VAR fit. Both are deterministic per-sample functions.

mod ct;
mod gvar;

use rayon::prelude::*;

use crate::error::Result;
use crate::series::Series;
use crate::stats::GraphScores;

pub use ct::correlation_thresholding;
pub use gvar::{gvar, gvar_fit, GvarFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    Ct,
    Gvar,
}

impl Baseline {
    pub const ALL: [Baseline; 2] = [Baseline::Ct, Baseline::Gvar];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::Ct => "CT",
            Baseline::Gvar => "GVAR",
        }
    }

    pub fn score(self, series: &Series, max_lag: usize) -> Result<GraphScores> {
        match self {
            Baseline::Ct => correlation_thresholding(series, max_lag),
            Baseline::Gvar => gvar(series, max_lag),
        }
    }

    /// Scores many series in parallel; output order follows input order.
    pub fn score_all(self, series: &[&Series], max_lag: usize) -> Result<Vec<GraphScores>> {
        series.par_iter().map(|s| self.score(s, max_lag)).collect()
    }
}
