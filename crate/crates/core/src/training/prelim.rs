//! The two auxiliary tasks run on the `Pre` dataset: classifying a sample
//! as linear or nonlinear, and regressing the raw coefficient tensor.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{init_params, Architecture, Graph, ModelDims, ModelFlags, ModelParams, SizePreset};
use crate::seed;
use crate::semgen::{Dataset, Sample};
use crate::series::Series;
use crate::stats::auroc;
use crate::training::config::TrainConfig;
use crate::training::fit::{fit, EpochRecord, Objective, TrainOutcome};

const LABEL_SHUFFLE_TAG: u64 = 0x6c73_6866;
const NULL_TAG: u64 = 0x6e75_6c6c;
const NULL_PERMUTATIONS: usize = 1000;
const COLLAPSE_RATIO: f64 = 0.1;
const EVAL_CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NlClassifierReport {
    pub test_auroc: f64,
    /// AUROC of the same test scores under random label permutations.
    pub null_mean: f64,
    pub null_std: f64,
    pub permutations: usize,
    /// `(test_auroc − null_mean) / null_std`.
    pub z_score: f64,
    pub shuffled_labels: bool,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffRegressionReport {
    pub test_mse: f64,
    /// MSE of each `(i, j, n)` entry across test samples.
    pub per_entry_mse: Vec<f64>,
    /// Mean over entries of the across-sample variance of the labels.
    pub label_variance: f64,
    /// Same for the predictions.
    pub prediction_variance: f64,
    /// Predictions barely vary across samples (variance below 10% of the
    /// labels'): the network has fallen back to predicting the mean.
    pub mean_collapse: bool,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

fn dims_of(dataset: &Dataset) -> ModelDims {
    ModelDims {
        num_vars: dataset.num_vars,
        max_lag: dataset.max_lag,
        series_len: dataset.series_len,
    }
}

fn shuffle_nonlinear(samples: &[Sample], seed: u64) -> Vec<Sample> {
    let mut labels: Vec<bool> = samples.iter().map(|s| s.nonlinear).collect();
    labels.shuffle(&mut seed::rng(seed));
    samples
        .iter()
        .zip(labels)
        .map(|(s, nonlinear)| Sample {
            nonlinear,
            ..s.clone()
        })
        .collect()
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, v.sqrt())
}

/// Trains the count head, passed through a sigmoid, to separate linear
/// from nonlinear samples and scores it on Test-Set 1. With
/// `shuffle_labels` the train and validation labels are permuted first,
/// which should leave nothing to learn.
pub fn train_nl_classifier(
    architecture: Architecture,
    preset: SizePreset,
    dataset: &Dataset,
    config: &TrainConfig,
    shuffle_labels: bool,
) -> Result<NlClassifierReport> {
    let flags = ModelFlags {
        correlation_injection: config.correlation_injection,
        regression_head: true,
    };
    let model = init_params(architecture, preset, dims_of(dataset), flags, config.seed)?;
    let (train, val) = if shuffle_labels {
        (
            shuffle_nonlinear(&dataset.train, seed::derive(config.seed, LABEL_SHUFFLE_TAG, 0)),
            shuffle_nonlinear(&dataset.val, seed::derive(config.seed, LABEL_SHUFFLE_TAG, 1)),
        )
    } else {
        (dataset.train.clone(), dataset.val.clone())
    };
    let mask = vec![true; dataset.num_entries()];
    let outcome = fit(model, &train, &val, &mask, config, Objective::Nonlinearity, &mut |_| {})?;

    let test = &dataset.test1;
    let series: Vec<&Series> = test.iter().map(|s| &s.series).collect();
    let scores: Vec<f64> = outcome
        .model
        .forward_batch(&series, EVAL_CHUNK)?
        .into_iter()
        .map(|o| o.count_estimate.expect("classifier has a count head"))
        .collect();
    let labels: Vec<bool> = test.iter().map(|s| s.nonlinear).collect();
    let test_auroc = auroc(&scores, &labels)
        .ok_or_else(|| Error::data("test split needs both linear and nonlinear samples"))?;

    let mut rng = seed::rng(seed::derive(config.seed, NULL_TAG, 0));
    let mut permuted = labels.clone();
    let null: Vec<f64> = (0..NULL_PERMUTATIONS)
        .map(|_| {
            permuted.shuffle(&mut rng);
            auroc(&scores, &permuted).expect("permutation keeps both classes")
        })
        .collect();
    let (null_mean, null_std) = mean_std(&null);
    Ok(NlClassifierReport {
        test_auroc,
        null_mean,
        null_std,
        permutations: NULL_PERMUTATIONS,
        z_score: (test_auroc - null_mean) / null_std,
        shuffled_labels: shuffle_labels,
        best_epoch: outcome.best_epoch,
        history: outcome.history,
    })
}

/// Raw graph-head outputs (no sigmoid) for every sample.
pub fn predict_logits(model: &ModelParams, samples: &[Sample]) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(EVAL_CHUNK) {
        let series: Vec<&Series> = chunk.iter().map(|s| &s.series).collect();
        let (x, corr) = model.batch_inputs(&series)?;
        let mut g = Graph::new();
        let vars = model.leaves(&mut g, false);
        let x = g.constant(x);
        let corr = corr.map(|c| g.constant(c));
        let nodes = model.build(&mut g, &vars, x, corr);
        let logits = g.value(nodes.logits);
        out.extend((0..chunk.len()).map(|r| logits.row(r).to_vec()));
    }
    Ok(out)
}

/// Per-entry MSE and the mean-collapse diagnostic of `predictions`
/// against the samples' coefficient tensors.
pub fn coeff_metrics(predictions: &[Vec<f64>], samples: &[Sample]) -> Result<(Vec<f64>, f64, f64, f64)> {
    let n = samples.len();
    if n == 0 || predictions.len() != n {
        return Err(Error::shape(n, predictions.len()));
    }
    let e = samples[0].coeffs.values().len();
    let mut mse = vec![0.0; e];
    let mut label_var = 0.0;
    let mut pred_var = 0.0;
    for k in 0..e {
        let y: Vec<f64> = samples.iter().map(|s| s.coeffs.values()[k]).collect();
        let p: Vec<f64> = predictions.iter().map(|p| p[k]).collect();
        mse[k] = y.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64;
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / n as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64
        };
        label_var += var(&y);
        pred_var += var(&p);
    }
    let total = mse.iter().sum::<f64>() / e as f64;
    Ok((mse, total, label_var / e as f64, pred_var / e as f64))
}

/// Trains the graph head without its sigmoid to regress the coefficient
/// tensor under MSE and reports Test-Set 1 errors.
pub fn train_coeff_regressor(
    architecture: Architecture,
    preset: SizePreset,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<CoeffRegressionReport> {
    let outcome = fit_coeff_regressor(architecture, preset, dataset, config)?;
    let predictions = predict_logits(&outcome.model, &dataset.test1)?;
    let (per_entry_mse, test_mse, label_variance, prediction_variance) =
        coeff_metrics(&predictions, &dataset.test1)?;
    Ok(CoeffRegressionReport {
        test_mse,
        per_entry_mse,
        label_variance,
        prediction_variance,
        mean_collapse: prediction_variance < COLLAPSE_RATIO * label_variance,
        best_epoch: outcome.best_epoch,
        history: outcome.history,
    })
}

fn fit_coeff_regressor(
    architecture: Architecture,
    preset: SizePreset,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let flags = ModelFlags {
        correlation_injection: config.correlation_injection,
        regression_head: false,
    };
    let model = init_params(architecture, preset, dims_of(dataset), flags, config.seed)?;
    let mask = vec![true; dataset.num_entries()];
    fit(model, &dataset.train, &dataset.val, &mask, config, Objective::Coefficients, &mut |_| {})
}
