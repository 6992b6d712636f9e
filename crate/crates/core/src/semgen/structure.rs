use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, Rng};
use crate::semgen::config::{DatasetConfig, SplitParams};
use crate::semgen::functions::FunctionSetId;

/// Lagged causal coefficients, indexed `[i][j][n]`: variable `j` at lag `n`
/// (1-based) drives variable `i`. Stored flat, lag fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffTensor {
    num_vars: usize,
    max_lag: usize,
    values: Vec<f64>,
    func_ids: Vec<u8>,
}

impl CoeffTensor {
    pub fn zeros(num_vars: usize, max_lag: usize) -> Self {
        let n = num_vars * num_vars * max_lag;
        Self {
            num_vars,
            max_lag,
            values: vec![0.0; n],
            func_ids: vec![0; n],
        }
    }

    pub fn from_parts(
        num_vars: usize,
        max_lag: usize,
        values: Vec<f64>,
        func_ids: Vec<u8>,
    ) -> Result<Self> {
        let n = num_vars * num_vars * max_lag;
        if values.len() != n || func_ids.len() != n {
            return Err(Error::shape(
                format!("{n} entries"),
                format!("{} values / {} ids", values.len(), func_ids.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("non-finite coefficient"));
        }
        Ok(Self {
            num_vars,
            max_lag,
            values,
            func_ids,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    pub fn num_entries(&self) -> usize {
        self.values.len()
    }

    /// Flat offset of `(i, j, lag)` with `lag` in `1..=max_lag`.
    #[inline]
    pub fn index(&self, i: usize, j: usize, lag: usize) -> usize {
        debug_assert!(lag >= 1 && lag <= self.max_lag);
        (i * self.num_vars + j) * self.max_lag + (lag - 1)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, lag: usize) -> f64 {
        self.values[self.index(i, j, lag)]
    }

    pub fn set(&mut self, i: usize, j: usize, lag: usize, value: f64, func_id: u8) {
        let k = self.index(i, j, lag);
        self.values[k] = value;
        self.func_ids[k] = func_id;
    }

    #[inline]
    pub fn func_id(&self, i: usize, j: usize, lag: usize) -> u8 {
        self.func_ids[self.index(i, j, lag)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn func_ids(&self) -> &[u8] {
        &self.func_ids
    }

    /// Binary edge labels `[A != 0]` in flat order.
    pub fn labels(&self) -> Vec<bool> {
        self.values.iter().map(|&v| v != 0.0).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0.0).count()
    }

    /// True when every present edge uses the identity function.
    pub fn is_linear(&self) -> bool {
        self.values
            .iter()
            .zip(&self.func_ids)
            .all(|(&v, &f)| v == 0.0 || f == 0)
    }

    /// Lag matrix `A_lag` as row-major V×V.
    pub fn lag_matrix(&self, lag: usize) -> Vec<f64> {
        let v = self.num_vars;
        let mut m = vec![0.0; v * v];
        for i in 0..v {
            for j in 0..v {
                m[i * v + j] = self.get(i, j, lag);
            }
        }
        m
    }
}

/// Draws a structure with the config's base coefficient range.
pub fn sample_structure(config: &DatasetConfig, seed: u64) -> CoeffTensor {
    let mut rng = seed::rng(seed);
    draw_structure(
        config,
        config.split_params(super::SplitKind::Train),
        None,
        true,
        &mut rng,
    )
}

/// Entrywise structure draw. Every entry consumes the same number of random
/// values regardless of outcome, so streams stay aligned across configs.
pub(crate) fn draw_structure(
    config: &DatasetConfig,
    params: SplitParams,
    pattern: Option<&[bool]>,
    allow_nonlinear: bool,
    rng: &mut Rng,
) -> CoeffTensor {
    let v = config.num_vars;
    let n = config.max_lag;
    let set = config.function_set;
    let num_fns = set.functions().len();
    let nonlinear = allow_nonlinear && set != FunctionSetId::L;
    let (low, high) = params.coeff_range;

    let mut out = CoeffTensor::zeros(v, n);
    for k in 0..out.num_entries() {
        let u: f64 = rng.random();
        let magnitude: f64 = low + (high - low) * rng.random::<f64>();
        let negative = rng.random::<bool>();
        let u_fn: f64 = rng.random();
        let fn_pick = rng.random_range(1..num_fns.max(2));

        let present = match pattern {
            Some(p) => p[k],
            None => u < config.link_probability,
        };
        if !present {
            continue;
        }
        let mut value = magnitude as f32 as f64;
        if config.signed_coeffs && negative {
            value = -value;
        }
        let func = if nonlinear && u_fn < config.nl_probability {
            fn_pick as u8
        } else {
            0
        };
        out.values[k] = value;
        out.func_ids[k] = func;
    }
    out
}
