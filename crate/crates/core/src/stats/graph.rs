use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Edge-existence scores for a window causal graph, flat `[i][j][lag]` with
/// lag fastest. Entry `(i, j, n)` scores "variable j at lag n drives i".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphScores {
    num_vars: usize,
    max_lag: usize,
    values: Vec<f64>,
}

impl GraphScores {
    pub fn new(num_vars: usize, max_lag: usize, values: Vec<f64>) -> Result<Self> {
        let n = num_vars * num_vars * max_lag;
        if values.len() != n {
            return Err(Error::shape(n, values.len()));
        }
        if let Some(bad) = values.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::data(format!("graph score {bad} outside [0, 1]")));
        }
        Ok(Self {
            num_vars,
            max_lag,
            values,
        })
    }

    pub fn zeros(num_vars: usize, max_lag: usize) -> Self {
        Self {
            num_vars,
            max_lag,
            values: vec![0.0; num_vars * num_vars * max_lag],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, lag: usize) -> usize {
        (i * self.num_vars + j) * self.max_lag + (lag - 1)
    }

    pub fn get(&self, i: usize, j: usize, lag: usize) -> f64 {
        self.values[self.index(i, j, lag)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Nested `[i][j][lag-1]` view.
    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.num_vars)
            .map(|i| {
                (0..self.num_vars)
                    .map(|j| (1..=self.max_lag).map(|n| self.get(i, j, n)).collect())
                    .collect()
            })
            .collect()
    }

    pub fn from_nested(nested: &[Vec<Vec<f64>>]) -> Result<Self> {
        let v = nested.len();
        let n = nested.first().and_then(|r| r.first()).map_or(0, Vec::len);
        if nested.iter().any(|r| r.len() != v || r.iter().any(|c| c.len() != n)) {
            return Err(Error::data("ragged nested graph"));
        }
        Self::new(v, n, nested.iter().flatten().flatten().copied().collect())
    }
}

/// The lag-1 slab `G[·][·][1]` as a row-major V×V matrix.
pub fn summary_graph(graph: &GraphScores) -> Vec<Vec<f64>> {
    let v = graph.num_vars();
    (0..v)
        .map(|i| (0..v).map(|j| graph.get(i, j, 1)).collect())
        .collect()
}
