//! Trainable architectures: a flat MLP and a unidirectional GRU, both
//! ending in a linear head of width `V·V·N` (plus one count output when the
//! regression head is enabled).

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::graph::{Graph, Var};
use crate::nn::matrix::Matrix;
use crate::seed;
use crate::series::Series;
use crate::stats::{corr_features, GraphScores};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Mlp,
    #[serde(rename = "ugru")]
    Gru,
}

impl Architecture {
    pub const ALL: [Architecture; 2] = [Architecture::Mlp, Architecture::Gru];

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Mlp => "mlp",
            Architecture::Gru => "ugru",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mlp" => Ok(Architecture::Mlp),
            "ugru" | "gru" => Ok(Architecture::Gru),
            _ => Err(Error::config(format!("unknown architecture '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizePreset {
    Small,
    Medium,
}

impl SizePreset {
    /// Parameter-count target per architecture.
    pub fn target(self, arch: Architecture) -> usize {
        match (arch, self) {
            (Architecture::Mlp, SizePreset::Small) => 13_400,
            (Architecture::Mlp, SizePreset::Medium) => 118_000,
            (Architecture::Gru, SizePreset::Small) => 13_000,
            (Architecture::Gru, SizePreset::Medium) => 126_000,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SizePreset::Small => "small",
            SizePreset::Medium => "medium",
        }
    }
}

impl fmt::Display for SizePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SizePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "small" => Ok(SizePreset::Small),
            "medium" => Ok(SizePreset::Medium),
            _ => Err(Error::config(format!("unknown size preset '{s}'"))),
        }
    }
}

/// Shapes a model is bound to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub num_vars: usize,
    pub max_lag: usize,
    pub series_len: usize,
}

impl ModelDims {
    pub fn graph_len(&self) -> usize {
        self.num_vars * self.num_vars * self.max_lag
    }

    pub fn input_len(&self) -> usize {
        self.series_len * self.num_vars
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ModelFlags {
    pub correlation_injection: bool,
    pub regression_head: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
    pub grad: Vec<f64>,
}

impl ParamTensor {
    fn zeros(name: &str, rows: usize, cols: usize) -> Self {
        Self {
            name: name.to_string(),
            shape: vec![rows, cols],
            values: vec![0.0; rows * cols],
            grad: vec![0.0; rows * cols],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn matrix(&self) -> Matrix {
        Matrix::from_vec(self.shape[0], self.shape[1], self.values.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub architecture: Architecture,
    pub preset: SizePreset,
    pub dims: ModelDims,
    pub flags: ModelFlags,
    pub hidden: usize,
    pub tensors: Vec<ParamTensor>,
}

/// Per-sample network output.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub graph: GraphScores,
    pub count_estimate: Option<f64>,
}

/// Handles into a graph built by [`ModelParams::build`].
#[derive(Debug, Clone, Copy)]
pub struct ForwardNodes {
    /// Full pre-activation head, `batch × head_width`.
    pub head: Var,
    /// First `V·V·N` head columns before the sigmoid.
    pub logits: Var,
    pub probs: Var,
    /// Identity-activated count column.
    pub count: Option<Var>,
}

/// Leaf handles for the parameter tensors, aligned with `ModelParams::tensors`.
#[derive(Debug, Clone)]
pub struct ParamVars(pub Vec<Var>);

fn head_width(dims: &ModelDims, flags: &ModelFlags) -> usize {
    dims.graph_len() + flags.regression_head as usize
}

fn corr_width(dims: &ModelDims, flags: &ModelFlags) -> usize {
    if flags.correlation_injection {
        dims.graph_len()
    } else {
        0
    }
}

/// Tensor table `(name, rows, cols, is_weight)` for a hidden width.
fn layout(
    arch: Architecture,
    dims: &ModelDims,
    flags: &ModelFlags,
    h: usize,
) -> Vec<(&'static str, usize, usize, bool)> {
    let out = head_width(dims, flags);
    let feat = h + corr_width(dims, flags);
    match arch {
        Architecture::Mlp => vec![
            ("w1", dims.input_len(), h, true),
            ("b1", 1, h, false),
            ("w2", h, h, true),
            ("b2", 1, h, false),
            ("w_out", feat, out, true),
            ("b_out", 1, out, false),
        ],
        Architecture::Gru => vec![
            ("w_x", dims.num_vars, 3 * h, true),
            ("u_zr", h, 2 * h, true),
            ("u_n", h, h, true),
            ("b_gate", 1, 3 * h, false),
            ("w_out", feat, out, true),
            ("b_out", 1, out, false),
        ],
    }
}

fn count_for(arch: Architecture, dims: &ModelDims, flags: &ModelFlags, h: usize) -> usize {
    layout(arch, dims, flags, h).iter().map(|(_, r, c, _)| r * c).sum()
}

/// Hidden width whose parameter count lands closest to the preset target.
pub fn hidden_width(
    arch: Architecture,
    preset: SizePreset,
    dims: &ModelDims,
    flags: &ModelFlags,
) -> usize {
    let target = preset.target(arch) as i64;
    (1..=4096)
        .min_by_key(|&h| (count_for(arch, dims, flags, h) as i64 - target).abs())
        .expect("non-empty range")
}

/// Fan-in scaled uniform weights `U(±1/√fan_in)`, zero biases. Values are
/// rounded to `f32` so checkpoints round-trip exactly.
pub fn init_params(
    arch: Architecture,
    preset: SizePreset,
    dims: ModelDims,
    flags: ModelFlags,
    seed: u64,
) -> Result<ModelParams> {
    if dims.num_vars == 0 || dims.max_lag == 0 || dims.series_len <= dims.max_lag {
        return Err(Error::config(format!(
            "invalid model dims V={} N={} T={}",
            dims.num_vars, dims.max_lag, dims.series_len
        )));
    }
    let hidden = hidden_width(arch, preset, &dims, &flags);
    let mut rng = seed::rng(seed);
    let tensors = layout(arch, &dims, &flags, hidden)
        .into_iter()
        .map(|(name, rows, cols, is_weight)| {
            let mut t = ParamTensor::zeros(name, rows, cols);
            if is_weight {
                let bound = 1.0 / (rows as f64).sqrt();
                for v in &mut t.values {
                    *v = rng.random_range(-bound..bound) as f32 as f64;
                }
            }
            t
        })
        .collect();
    Ok(ModelParams {
        architecture: arch,
        preset,
        dims,
        flags,
        hidden,
        tensors,
    })
}

impl ModelParams {
    pub fn param_count(&self) -> usize {
        self.tensors.iter().map(ParamTensor::len).sum()
    }

    pub fn head_width(&self) -> usize {
        head_width(&self.dims, &self.flags)
    }

    pub fn tensor(&self, name: &str) -> Option<&ParamTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut ParamTensor> {
        self.tensors.iter_mut().find(|t| t.name == name)
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.values.iter().all(|v| v.is_finite()))
    }

    pub fn zero_grad(&mut self) {
        for t in &mut self.tensors {
            t.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    pub fn round_to_f32(&mut self) {
        for t in &mut self.tensors {
            t.values.iter_mut().for_each(|v| *v = *v as f32 as f64);
        }
    }

    /// Verifies the tensor table against the architecture layout.
    pub fn check_layout(&self) -> Result<()> {
        let expected = layout(self.architecture, &self.dims, &self.flags, self.hidden);
        if expected.len() != self.tensors.len() {
            return Err(Error::shape(
                format!("{} tensors", expected.len()),
                self.tensors.len(),
            ));
        }
        for ((name, rows, cols, _), t) in expected.iter().zip(&self.tensors) {
            if t.name != *name || t.shape != [*rows, *cols] || t.values.len() != rows * cols {
                return Err(Error::shape(
                    format!("{name} [{rows}, {cols}]"),
                    format!("{} {:?}", t.name, t.shape),
                ));
            }
        }
        Ok(())
    }

    /// Places every tensor on `g`, as variables when `trainable`.
    pub fn leaves(&self, g: &mut Graph, trainable: bool) -> ParamVars {
        ParamVars(
            self.tensors
                .iter()
                .map(|t| {
                    if trainable {
                        g.variable(t.matrix())
                    } else {
                        g.constant(t.matrix())
                    }
                })
                .collect(),
        )
    }

    /// Copies gradients of the last backward pass into the tensor slots.
    pub fn collect_grads(&mut self, g: &Graph, vars: &ParamVars) {
        for (t, &v) in self.tensors.iter_mut().zip(&vars.0) {
            match g.grad(v) {
                Some(m) => t.grad.copy_from_slice(&m.data),
                None => t.grad.iter_mut().for_each(|x| *x = 0.0),
            }
        }
    }

    /// Builds the forward pass for a batch. `x` is `batch × T·V` (step-major
    /// rows), `corr` is `batch × V·V·N` and must be present iff injection is on.
    pub fn build(&self, g: &mut Graph, vars: &ParamVars, x: Var, corr: Option<Var>) -> ForwardNodes {
        assert_eq!(
            corr.is_some(),
            self.flags.correlation_injection,
            "corr features must match the injection flag"
        );
        let features = match self.architecture {
            Architecture::Mlp => self.mlp_features(g, vars, x),
            Architecture::Gru => self.gru_features(g, vars, x),
        };
        let features = match corr {
            Some(c) => g.concat_cols(&[features, c]),
            None => features,
        };
        let (w_out, b_out) = (vars.0[4], vars.0[5]);
        let head = g.matmul(features, w_out);
        let head = g.add_row(head, b_out);
        let e = self.dims.graph_len();
        let (logits, count) = if self.flags.regression_head {
            (g.slice_cols(head, 0, e), Some(g.slice_cols(head, e, e + 1)))
        } else {
            (head, None)
        };
        let probs = g.sigmoid(logits);
        ForwardNodes {
            head,
            logits,
            probs,
            count,
        }
    }

    fn mlp_features(&self, g: &mut Graph, vars: &ParamVars, x: Var) -> Var {
        let p = &vars.0;
        let a = g.matmul(x, p[0]);
        let a = g.add_row(a, p[1]);
        let a = g.relu(a);
        let b = g.matmul(a, p[2]);
        let b = g.add_row(b, p[3]);
        g.relu(b)
    }

    /// `z, r = σ(x W_zr + h U_zr + b_zr)`, `n = tanh(x W_n + (r ⊙ h) U_n + b_n)`,
    /// `h' = n + z ⊙ (h − n)`, scanned over all T steps from `h = 0`.
    fn gru_features(&self, g: &mut Graph, vars: &ParamVars, x: Var) -> Var {
        let p = &vars.0;
        let (w_x, u_zr, u_n, b_gate) = (p[0], p[1], p[2], p[3]);
        let hd = self.hidden;
        let v = self.dims.num_vars;
        let batch = g.value(x).rows;
        let mut h = g.constant(Matrix::zeros(batch, hd));
        for t in 0..self.dims.series_len {
            let xt = g.slice_cols(x, t * v, (t + 1) * v);
            let xw = g.matmul(xt, w_x);
            let xw = g.add_row(xw, b_gate);
            let xw_zr = g.slice_cols(xw, 0, 2 * hd);
            let xw_n = g.slice_cols(xw, 2 * hd, 3 * hd);
            let hu = g.matmul(h, u_zr);
            let pre = g.add(xw_zr, hu);
            let zr = g.sigmoid(pre);
            let z = g.slice_cols(zr, 0, hd);
            let r = g.slice_cols(zr, hd, 2 * hd);
            let rh = g.mul(r, h);
            let cand = g.matmul(rh, u_n);
            let cand = g.add(xw_n, cand);
            let n = g.tanh(cand);
            let diff = g.sub(h, n);
            let gated = g.mul(z, diff);
            h = g.add(n, gated);
        }
        h
    }

    fn check_series(&self, series: &Series) -> Result<()> {
        let d = &self.dims;
        if series.len() != d.series_len || series.num_vars() != d.num_vars {
            return Err(Error::shape(
                format!("{}x{}", d.series_len, d.num_vars),
                format!("{}x{}", series.len(), series.num_vars()),
            ));
        }
        Ok(())
    }

    /// Stacks series into the batch input and, when injection is on, the
    /// `|lcc|` feature rows.
    pub fn batch_inputs(&self, series: &[&Series]) -> Result<(Matrix, Option<Matrix>)> {
        let d = &self.dims;
        let mut x = Vec::with_capacity(series.len() * d.input_len());
        let mut corr = Vec::new();
        for s in series {
            self.check_series(s)?;
            x.extend_from_slice(s.as_slice());
            if self.flags.correlation_injection {
                corr.extend(corr_features(s, d.max_lag)?);
            }
        }
        let x = Matrix::from_vec(series.len(), d.input_len(), x);
        let corr = self
            .flags
            .correlation_injection
            .then(|| Matrix::from_vec(series.len(), d.graph_len(), corr));
        Ok((x, corr))
    }

    /// Inference on one batch; no gradients are recorded.
    fn forward_chunk(&self, series: &[&Series]) -> Result<Vec<ForwardOutput>> {
        let (x, corr) = self.batch_inputs(series)?;
        let mut g = Graph::new();
        let vars = self.leaves(&mut g, false);
        let x = g.constant(x);
        let corr = corr.map(|c| g.constant(c));
        let nodes = self.build(&mut g, &vars, x, corr);
        let probs = g.value(nodes.probs);
        let count = nodes.count.map(|c| g.value(c).clone());
        (0..series.len())
            .map(|r| {
                Ok(ForwardOutput {
                    graph: emitted_scores(&self.dims, probs.row(r))?,
                    count_estimate: count.as_ref().map(|c| c.data[r]),
                })
            })
            .collect()
    }

    /// Batched inference, chunked and parallel across chunks. Rows are
    /// computed independently, so the result equals per-sample forwards.
    pub fn forward_batch(&self, series: &[&Series], chunk: usize) -> Result<Vec<ForwardOutput>> {
        let chunk = chunk.max(1);
        let parts: Vec<Vec<ForwardOutput>> = series
            .par_chunks(chunk)
            .map(|c| self.forward_chunk(c))
            .collect::<Result<_>>()?;
        Ok(parts.into_iter().flatten().collect())
    }

    pub fn forward(&self, series: &Series) -> Result<ForwardOutput> {
        let corr = if self.flags.correlation_injection {
            Some(corr_features(series, self.dims.max_lag)?)
        } else {
            None
        };
        self.forward_with(series, corr.as_deref())
    }

    /// Single-sample forward with caller-supplied correlation features.
    pub fn forward_with(&self, series: &Series, corr: Option<&[f64]>) -> Result<ForwardOutput> {
        self.check_series(series)?;
        let e = self.dims.graph_len();
        if corr.is_some() != self.flags.correlation_injection {
            return Err(Error::config(format!(
                "correlation features {} but injection is {}",
                if corr.is_some() { "given" } else { "missing" },
                if self.flags.correlation_injection { "on" } else { "off" }
            )));
        }
        if let Some(c) = corr {
            if c.len() != e {
                return Err(Error::shape(e, c.len()));
            }
        }
        let mut g = Graph::new();
        let vars = self.leaves(&mut g, false);
        let x = g.constant(Matrix::from_vec(1, self.dims.input_len(), series.as_slice().to_vec()));
        let corr = corr.map(|c| g.constant(Matrix::from_vec(1, e, c.to_vec())));
        let nodes = self.build(&mut g, &vars, x, corr);
        Ok(ForwardOutput {
            graph: emitted_scores(&self.dims, g.value(nodes.probs).row(0))?,
            count_estimate: nodes.count.map(|c| g.value(c).data[0]),
        })
    }
}

/// Sigmoid outputs saturate to exactly 0 or 1 in floating point; emitted
/// scores are pulled back inside the open interval.
fn emitted_scores(dims: &ModelDims, probs: &[f64]) -> Result<GraphScores> {
    const HI: f64 = 1.0 - f64::EPSILON / 2.0;
    let values = probs.iter().map(|p| p.clamp(f64::MIN_POSITIVE, HI)).collect();
    GraphScores::new(dims.num_vars, dims.max_lag, values)
}

pub fn mlp_forward(params: &ModelParams, series: &Series, corr: Option<&[f64]>) -> Result<ForwardOutput> {
    if params.architecture != Architecture::Mlp {
        return Err(Error::config("mlp_forward called on a non-MLP model"));
    }
    params.forward_with(series, corr)
}

pub fn gru_forward(params: &ModelParams, series: &Series, corr: Option<&[f64]>) -> Result<ForwardOutput> {
    if params.architecture != Architecture::Gru {
        return Err(Error::config("gru_forward called on a non-GRU model"));
    }
    params.forward_with(series, corr)
}
