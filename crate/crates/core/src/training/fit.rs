//! Mini-batch training with validation-based early stopping.

use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{
    gradcheck_loss, init_params, Architecture, ForwardNodes, GradcheckReport, Graph, Matrix,
    ModelDims, ModelFlags, ModelParams, ParamVars, SizePreset, Var,
};
use crate::seed;
use crate::semgen::{CoeffTensor, Dataset, Sample};
use crate::series::Series;
use crate::stats::{auroc, corr_features, dataset_auroc, AurocSummary, GraphScores, Pooling};
use crate::training::config::TrainConfig;
use crate::training::loss::{cr_weights, total_loss, BatchTargets, LossWeights};
use crate::training::optim::{adamw_step, OptimState};

const SHUFFLE_TAG: u64 = 0x7368_7566;
const EVAL_CHUNK: usize = 256;
const GRADCHECK_STEP: f64 = 1e-4;

/// What the network is trained to predict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Window causal graph (BCE, optional count regression and CR).
    CausalGraph,
    /// Linear vs nonlinear sample label read from the count output through a sigmoid.
    Nonlinearity,
    /// Raw coefficient values from the graph head, no sigmoid, MSE.
    Coefficients,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_auroc: Option<f64>,
    pub improved: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the lowest validation loss.
    pub model: ModelParams,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
}

/// Per-sample model inputs and targets, computed once per split.
struct Prepared<'a> {
    series: Vec<&'a Series>,
    abs_lcc: Vec<Vec<f64>>,
    labels: Vec<Vec<f64>>,
    counts: Vec<f64>,
    nonlinear: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
}

impl<'a> Prepared<'a> {
    fn new(samples: &'a [Sample], max_lag: usize) -> Result<Self> {
        let mut p = Prepared {
            series: Vec::with_capacity(samples.len()),
            abs_lcc: Vec::with_capacity(samples.len()),
            labels: Vec::with_capacity(samples.len()),
            counts: Vec::with_capacity(samples.len()),
            nonlinear: Vec::with_capacity(samples.len()),
            coeffs: Vec::with_capacity(samples.len()),
        };
        for s in samples {
            p.series.push(&s.series);
            p.abs_lcc.push(corr_features(&s.series, max_lag)?);
            p.labels.push(s.labels().iter().map(|&l| l as u8 as f64).collect());
            p.counts.push(s.coeffs.edge_count() as f64);
            p.nonlinear.push(s.nonlinear as u8 as f64);
            p.coeffs.push(s.coeffs.values().to_vec());
        }
        Ok(p)
    }

    fn len(&self) -> usize {
        self.series.len()
    }
}

struct Trainer<'a> {
    config: &'a TrainConfig,
    objective: Objective,
    mask: Vec<f64>,
    has_mask: bool,
}

impl Trainer<'_> {
    fn rows(src: &[Vec<f64>], idx: &[usize]) -> Matrix {
        let cols = src.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(idx.len() * cols);
        for &i in idx {
            data.extend_from_slice(&src[i]);
        }
        Matrix::from_vec(idx.len(), cols, data)
    }

    /// Builds input leaves, forward pass and loss for the samples `idx`.
    fn loss(
        &self,
        model: &ModelParams,
        g: &mut Graph,
        vars: &ParamVars,
        data: &Prepared,
        idx: &[usize],
    ) -> Result<(Var, ForwardNodes)> {
        let d = &model.dims;
        let mut x = Vec::with_capacity(idx.len() * d.input_len());
        for &i in idx {
            let s = data.series[i];
            if s.len() != d.series_len || s.num_vars() != d.num_vars {
                return Err(Error::shape(
                    format!("{}x{}", d.series_len, d.num_vars),
                    format!("{}x{}", s.len(), s.num_vars()),
                ));
            }
            x.extend_from_slice(s.as_slice());
        }
        let x = Matrix::from_vec(idx.len(), d.input_len(), x);
        let xv = g.constant(x);
        let corr = model
            .flags
            .correlation_injection
            .then(|| g.constant(Self::rows(&data.abs_lcc, idx)));
        let nodes = model.build(g, vars, xv, corr);
        let b = idx.len();
        let e = model.dims.graph_len();
        let tiled_mask = || {
            Matrix::from_vec(b, e, (0..b).flat_map(|_| self.mask.iter().copied()).collect())
        };
        let total = match self.objective {
            Objective::CausalGraph => {
                let mask = self.has_mask.then(tiled_mask);
                let beta = self.config.cr_beta;
                let mut weights = Vec::with_capacity(b * e);
                for &i in idx {
                    for (w, m) in cr_weights(&data.abs_lcc[i], beta).into_iter().zip(&self.mask) {
                        weights.push(w * m);
                    }
                }
                let targets = BatchTargets {
                    labels: Self::rows(&data.labels, idx),
                    mask,
                    counts: Matrix::from_vec(b, 1, idx.iter().map(|&i| data.counts[i]).collect()),
                    cr_weights: Matrix::from_vec(b, e, weights),
                };
                let w = LossWeights {
                    lambda_reg: self.config.lambda_reg,
                    lambda_cr: self.config.lambda_cr,
                    cr_alpha: self.config.cr_alpha,
                };
                total_loss(g, &nodes, &targets, &w).total
            }
            Objective::Nonlinearity => {
                let count = nodes.count.ok_or_else(|| Error::config("nonlinearity objective needs the count head"))?;
                let p = g.sigmoid(count);
                let y = Matrix::from_vec(b, 1, idx.iter().map(|&i| data.nonlinear[i]).collect());
                g.bce(p, y, None)
            }
            Objective::Coefficients => {
                let target = g.constant(Self::rows(&data.coeffs, idx));
                let diff = g.sub(nodes.logits, target);
                let sq = g.square(diff);
                g.mean(sq)
            }
        };
        Ok((total, nodes))
    }

    /// Mean loss and AUROC over a split, without gradients.
    fn evaluate(&self, model: &ModelParams, data: &Prepared) -> Result<(f64, Option<f64>)> {
        let n = data.len();
        if n == 0 {
            return Err(Error::data("cannot evaluate an empty split"));
        }
        let all: Vec<usize> = (0..n).collect();
        let mut loss_sum = 0.0;
        let mut graph_rows: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut count_out: Vec<f64> = Vec::with_capacity(n);
        for chunk in all.chunks(EVAL_CHUNK) {
            let mut g = Graph::new();
            let vars = model.leaves(&mut g, false);
            let (loss, nodes) = self.loss(model, &mut g, &vars, data, chunk)?;
            loss_sum += g.value(loss).data[0] * chunk.len() as f64;
            let probs = g.value(nodes.probs);
            for r in 0..chunk.len() {
                graph_rows.push(probs.row(r).to_vec());
            }
            if let Some(c) = nodes.count {
                count_out.extend_from_slice(&g.value(c).data);
            }
        }
        let auroc_value = match self.objective {
            Objective::CausalGraph => {
                let summary = masked_auroc(
                    graph_rows.iter().map(Vec::as_slice),
                    data.labels.iter().map(|l| l.iter().map(|&y| y > 0.5).collect()),
                    &self.mask,
                );
                summary.mean.is_finite().then_some(summary.mean)
            }
            Objective::Nonlinearity => {
                let labels: Vec<bool> = data.nonlinear.iter().map(|&y| y > 0.5).collect();
                auroc(&count_out, &labels)
            }
            Objective::Coefficients => None,
        };
        Ok((loss_sum / n as f64, auroc_value))
    }
}

/// Per-sample mean AUROC restricted to `mask > 0` entries.
fn masked_auroc<'a>(
    scores: impl Iterator<Item = &'a [f64]>,
    labels: impl Iterator<Item = Vec<bool>>,
    mask: &[f64],
) -> AurocSummary {
    let pairs: Vec<(Vec<f64>, Vec<bool>)> = scores
        .zip(labels)
        .map(|(s, l)| {
            s.iter()
                .zip(&l)
                .zip(mask)
                .filter(|(_, &m)| m > 0.0)
                .map(|((&s, &l), _)| (s, l))
                .unzip()
        })
        .collect();
    dataset_auroc(pairs.iter().map(|(s, l)| (s.as_slice(), l.as_slice())), Pooling::PerSample)
}

/// Mean per-sample AUROC of `scores` against the samples' labels.
pub fn split_auroc(scores: &[GraphScores], samples: &[Sample], mask: &[bool]) -> AurocSummary {
    let mask: Vec<f64> = mask.iter().map(|&m| m as u8 as f64).collect();
    masked_auroc(
        scores.iter().map(GraphScores::values),
        samples.iter().map(Sample::labels),
        &mask,
    )
}

/// Scores every sample of a split with the model, batched.
pub fn score_samples(model: &ModelParams, samples: &[Sample]) -> Result<Vec<GraphScores>> {
    let series: Vec<&Series> = samples.iter().map(|s| &s.series).collect();
    Ok(model
        .forward_batch(&series, EVAL_CHUNK)?
        .into_iter()
        .map(|o| o.graph)
        .collect())
}

/// Trains the window-causal-graph objective on the dataset's train split,
/// early-stopping on its validation split.
pub fn train(model: ModelParams, dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with_progress(model, dataset, config, &mut |_| {})
}

pub fn train_with_progress(
    model: ModelParams,
    dataset: &Dataset,
    config: &TrainConfig,
    progress: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    if model.flags != config.model_flags() {
        return Err(Error::config(format!(
            "model flags {:?} do not match the training config {:?}",
            model.flags,
            config.model_flags()
        )));
    }
    fit(
        model,
        &dataset.train,
        &dataset.val,
        &dataset.entry_mask(),
        config,
        Objective::CausalGraph,
        progress,
    )
}

/// The generic loop behind [`train`]: shuffled mini-batches, AdamW, one
/// validation pass per epoch, best-validation snapshot, patience-based stop.
/// Parameters are kept `f32`-representable after every step.
pub fn fit(
    mut model: ModelParams,
    train: &[Sample],
    val: &[Sample],
    mask: &[bool],
    config: &TrainConfig,
    objective: Objective,
    progress: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    config.validate()?;
    model.check_layout()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::data("training needs non-empty train and validation splits"));
    }
    if mask.len() != model.dims.graph_len() {
        return Err(Error::shape(model.dims.graph_len(), mask.len()));
    }
    let trainer = Trainer {
        config,
        objective,
        mask: mask.iter().map(|&m| m as u8 as f64).collect(),
        has_mask: mask.iter().any(|&m| !m),
    };
    let train_data = Prepared::new(train, model.dims.max_lag)?;
    let val_data = Prepared::new(val, model.dims.max_lag)?;
    model.round_to_f32();

    let mut state = OptimState::new(&model);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::new();
    let mut best = model.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut stopped_early = false;

    for epoch in 0..config.max_epochs {
        let mut rng = seed::rng(seed::derive(config.seed, SHUFFLE_TAG, epoch as u64));
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for (step, idx) in order.chunks(config.batch_size).enumerate() {
            let mut g = Graph::new();
            let vars = model.leaves(&mut g, true);
            let (loss, _) = trainer.loss(&model, &mut g, &vars, &train_data, idx)?;
            let value = g.value(loss).data[0];
            if !value.is_finite() {
                return Err(Error::Divergence(format!(
                    "non-finite training loss at epoch {epoch}, step {step} \
                     (learning rate {} may be too high)",
                    config.learning_rate
                )));
            }
            g.backward(loss);
            model.collect_grads(&g, &vars);
            adamw_step(&mut model, &mut state, config.learning_rate, config.weight_decay);
            model.round_to_f32();
            sum += value * idx.len() as f64;
        }
        if !model.is_finite() {
            return Err(Error::Divergence(format!(
                "non-finite parameters after epoch {epoch} (learning rate {} may be too high)",
                config.learning_rate
            )));
        }
        let (val_loss, val_auroc) = trainer.evaluate(&model, &val_data)?;
        if !val_loss.is_finite() {
            return Err(Error::Divergence(format!(
                "non-finite validation loss at epoch {epoch} (learning rate {} may be too high)",
                config.learning_rate
            )));
        }
        let improved = val_loss < best_loss;
        if improved {
            best_loss = val_loss;
            best_epoch = epoch;
            best = model.clone();
            since_best = 0;
        } else {
            since_best += 1;
        }
        let record = EpochRecord {
            epoch,
            train_loss: sum / train.len() as f64,
            val_loss,
            val_auroc,
            improved,
        };
        progress(&record);
        history.push(record);
        if since_best >= config.patience {
            stopped_early = true;
            break;
        }
    }
    best.zero_grad();
    Ok(TrainOutcome {
        model: best,
        history,
        best_epoch,
        best_val_loss: best_loss,
        stopped_early,
    })
}

/// Validation-style loss and AUROC of `model` on any set of samples.
pub fn evaluate_loss(
    model: &ModelParams,
    samples: &[Sample],
    mask: &[bool],
    config: &TrainConfig,
    objective: Objective,
) -> Result<(f64, Option<f64>)> {
    let trainer = Trainer {
        config,
        objective,
        mask: mask.iter().map(|&m| m as u8 as f64).collect(),
        has_mask: mask.iter().any(|&m| !m),
    };
    trainer.evaluate(model, &Prepared::new(samples, model.dims.max_lag)?)
}

/// Finite-difference check of the full training loss of `objective` on a
/// tiny random instance (V = 2, N = 1, T = 8, four samples) with every
/// loss term active: count regression and CR for the graph objective,
/// correlation injection throughout.
pub fn gradcheck_objective(architecture: Architecture, objective: Objective, seed: u64) -> GradcheckReport {
    use rand::Rng;
    let dims = ModelDims {
        num_vars: 2,
        max_lag: 1,
        series_len: 8,
    };
    let flags = ModelFlags {
        correlation_injection: true,
        regression_head: objective != Objective::Coefficients,
    };
    let params = init_params(architecture, SizePreset::Small, dims, flags, seed).expect("valid tiny dims");
    let mut rng = seed::rng(seed ^ 0x6f62_6a63);
    let samples: Vec<Sample> = (0..4)
        .map(|k| {
            let series = Series::new(8, 2, (0..16).map(|_| rng.random::<f64>()).collect()).expect("8x2");
            let mut coeffs = CoeffTensor::zeros(2, 1);
            for i in 0..2 {
                for j in 0..2 {
                    if rng.random_bool(0.5) {
                        coeffs.set(i, j, 1, rng.random_range(0.3..0.5), 0);
                    }
                }
            }
            Sample {
                series,
                coeffs,
                sample_seed: k,
                nonlinear: k % 2 == 1,
            }
        })
        .collect();
    let config = TrainConfig {
        lambda_reg: 0.5,
        lambda_cr: 0.3,
        ..TrainConfig::default()
    };
    // The diagonal is masked so the masked BCE path is covered too.
    let mask = vec![false, true, true, false];
    let trainer = Trainer {
        config: &config,
        objective,
        mask: mask.iter().map(|&m| m as u8 as f64).collect(),
        has_mask: true,
    };
    let data = Prepared::new(&samples, 1).expect("valid tiny samples");
    let idx: Vec<usize> = (0..samples.len()).collect();
    gradcheck_loss(&params, GRADCHECK_STEP, |p, g, vars| {
        trainer.loss(p, g, vars, &data, &idx).expect("shapes agree").0
    })
}

/// Writes one JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
