use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A multivariate time series laid out step-major: `data[t * num_vars + v]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    len: usize,
    num_vars: usize,
    data: Vec<f64>,
}

impl Series {
    pub fn new(len: usize, num_vars: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != len * num_vars {
            return Err(Error::shape(
                format!("{len}x{num_vars} = {} values", len * num_vars),
                data.len(),
            ));
        }
        Ok(Self {
            len,
            num_vars,
            data,
        })
    }

    pub fn zeros(len: usize, num_vars: usize) -> Self {
        Self {
            len,
            num_vars,
            data: vec![0.0; len * num_vars],
        }
    }

    /// Builds a series from per-variable channels of equal length.
    pub fn from_channels(channels: &[Vec<f64>]) -> Result<Self> {
        let num_vars = channels.len();
        let len = channels.first().map_or(0, Vec::len);
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::data("channels have different lengths"));
        }
        let mut data = Vec::with_capacity(len * num_vars);
        for t in 0..len {
            data.extend(channels.iter().map(|c| c[t]));
        }
        Self::new(len, num_vars, data)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    #[inline]
    pub fn get(&self, t: usize, v: usize) -> f64 {
        self.data[t * self.num_vars + v]
    }

    #[inline]
    pub fn set(&mut self, t: usize, v: usize, value: f64) {
        self.data[t * self.num_vars + v] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.num_vars..(t + 1) * self.num_vars]
    }

    pub fn channel(&self, v: usize) -> Vec<f64> {
        (0..self.len).map(|t| self.get(t, v)).collect()
    }

    pub fn channels(&self) -> Vec<Vec<f64>> {
        (0..self.num_vars).map(|v| self.channel(v)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Steps `start..end` as a new series.
    pub fn window(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.len {
            return Err(Error::data(format!(
                "window {start}..{end} out of range for length {}",
                self.len
            )));
        }
        Self::new(
            end - start,
            self.num_vars,
            self.data[start * self.num_vars..end * self.num_vars].to_vec(),
        )
    }

    /// Per-channel min-max normalization; a constant channel maps to 0.5.
    pub fn normalize_minmax(&self) -> Self {
        let mut out = self.clone();
        for v in 0..self.num_vars {
            let (lo, hi) = (0..self.len).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| {
                let x = self.get(t, v);
                (lo.min(x), hi.max(x))
            });
            let range = hi - lo;
            for t in 0..self.len {
                let y = if range > 0.0 {
                    (self.get(t, v) - lo) / range
                } else {
                    0.5
                };
                out.set(t, v, y);
            }
        }
        out
    }

    /// Rounds every value to the nearest f32, the on-disk precision.
    pub fn round_to_f32(&mut self) {
        for x in &mut self.data {
            *x = *x as f32 as f64;
        }
    }

    /// The same series with its variables reordered: output variable `k` is
    /// input variable `perm[k]`.
    pub fn permute_vars(&self, perm: &[usize]) -> Self {
        let mut out = self.clone();
        for t in 0..self.len {
            for (k, &src) in perm.iter().enumerate() {
                out.set(t, k, self.get(t, src));
            }
        }
        out
    }
}
