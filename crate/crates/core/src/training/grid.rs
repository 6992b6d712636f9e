//! Cartesian hyperparameter search with repeated runs per cell.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{init_params, Architecture, ModelDims, SizePreset};
use crate::seed;
use crate::semgen::{Dataset, SplitKind};
use crate::stats::AurocSummary;
use crate::training::config::{TrainConfig, DEFAULT_LAMBDA_CR, DEFAULT_LAMBDA_REG};
use crate::training::fit::{score_samples, split_auroc, train, TrainOutcome};

const RUN_TAG: u64 = 0x6772_6964;
const RERUN_TAG: u64 = 0x7265_7275;

/// Which training additions are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Technique {
    pub injection: bool,
    pub regression: bool,
    pub cr: bool,
}

impl Technique {
    /// All eight on/off combinations.
    pub fn all() -> Vec<Technique> {
        (0..8u8)
            .map(|b| Technique {
                injection: b & 1 != 0,
                regression: b & 2 != 0,
                cr: b & 4 != 0,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpace {
    pub architecture: Architecture,
    pub preset: SizePreset,
    pub batch_sizes: Vec<usize>,
    pub learning_rates: Vec<f64>,
    pub weight_decays: Vec<f64>,
    pub techniques: Vec<Technique>,
    pub runs_per_cell: usize,
}

impl GridSpace {
    /// batch ∈ {32, 64}, lr ∈ {1e-3, 1e-4}, wd ∈ {0, 0.01}, every technique
    /// combination, two runs per cell.
    pub fn default_grid(architecture: Architecture, preset: SizePreset) -> Self {
        Self {
            architecture,
            preset,
            batch_sizes: vec![32, 64],
            learning_rates: vec![1e-3, 1e-4],
            weight_decays: vec![0.0, 0.01],
            techniques: Technique::all(),
            runs_per_cell: 2,
        }
    }

    /// The one cell matching `config`.
    pub fn single(architecture: Architecture, preset: SizePreset, config: &TrainConfig) -> Self {
        Self {
            architecture,
            preset,
            batch_sizes: vec![config.batch_size],
            learning_rates: vec![config.learning_rate],
            weight_decays: vec![config.weight_decay],
            techniques: vec![Technique {
                injection: config.correlation_injection,
                regression: config.lambda_reg > 0.0,
                cr: config.lambda_cr > 0.0,
            }],
            runs_per_cell: 1,
        }
    }

    pub fn cells(&self) -> Vec<GridCell> {
        let mut out = Vec::new();
        for &batch_size in &self.batch_sizes {
            for &learning_rate in &self.learning_rates {
                for &weight_decay in &self.weight_decays {
                    for &technique in &self.techniques {
                        out.push(GridCell {
                            index: out.len(),
                            batch_size,
                            learning_rate,
                            weight_decay,
                            technique,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub index: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub technique: Technique,
}

impl GridCell {
    /// `base` with this cell's axes applied. Enabled additions keep the
    /// base weight, or the documented default when the base has it at 0.
    pub fn config(&self, base: &TrainConfig, seed: u64) -> TrainConfig {
        let on = |w: f64, default: f64| if w > 0.0 { w } else { default };
        TrainConfig {
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            correlation_injection: self.technique.injection,
            lambda_reg: if self.technique.regression {
                on(base.lambda_reg, DEFAULT_LAMBDA_REG)
            } else {
                0.0
            },
            lambda_cr: if self.technique.cr {
                on(base.lambda_cr, DEFAULT_LAMBDA_CR)
            } else {
                0.0
            },
            seed,
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRun {
    pub seed: u64,
    pub best_val_loss: f64,
    pub best_epoch: usize,
    pub epochs: usize,
    pub val_auroc: Option<f64>,
    /// Set when the run aborted (e.g. divergence); such runs rank last.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub cell: GridCell,
    pub runs: Vec<GridRun>,
    /// Lowest validation loss over the cell's runs.
    pub best_val_loss: f64,
    /// Validation AUROC of that run.
    pub val_auroc: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct GridReport {
    /// Sorted by `best_val_loss`, ascending.
    pub cells: Vec<CellReport>,
    pub best: TrainOutcome,
    pub best_config: TrainConfig,
}

fn model_dims(dataset: &Dataset) -> ModelDims {
    ModelDims {
        num_vars: dataset.num_vars,
        max_lag: dataset.max_lag,
        series_len: dataset.series_len,
    }
}

fn run_once(space: &GridSpace, dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    let model = init_params(
        space.architecture,
        space.preset,
        model_dims(dataset),
        config.model_flags(),
        config.seed,
    )?;
    train(model, dataset, config)
}

/// Trains every cell `runs_per_cell` times (cells in parallel, each run
/// deterministic in its seed) and ranks cells by their lowest validation loss.
pub fn grid_search(space: &GridSpace, dataset: &Dataset, base: &TrainConfig) -> Result<GridReport> {
    let cells = space.cells();
    if cells.is_empty() || space.runs_per_cell == 0 {
        return Err(Error::config("grid has no cells or zero runs per cell"));
    }
    let jobs: Vec<(GridCell, u64)> = cells
        .iter()
        .flat_map(|c| (0..space.runs_per_cell).map(move |r| (*c, seed::derive(base.seed, RUN_TAG, r as u64))))
        .collect();
    let results: Vec<(GridCell, TrainConfig, Result<TrainOutcome>)> = jobs
        .par_iter()
        .map(|(cell, s)| {
            let config = cell.config(base, *s);
            let outcome = run_once(space, dataset, &config);
            (*cell, config, outcome)
        })
        .collect();

    let mut reports: Vec<CellReport> = cells
        .iter()
        .map(|c| CellReport {
            cell: *c,
            runs: Vec::new(),
            best_val_loss: f64::INFINITY,
            val_auroc: None,
        })
        .collect();
    let mut best: Option<(f64, TrainOutcome, TrainConfig)> = None;
    for (cell, config, outcome) in results {
        let report = &mut reports[cell.index];
        match outcome {
            Ok(o) => {
                let val_auroc = o.history.get(o.best_epoch).and_then(|r| r.val_auroc);
                report.runs.push(GridRun {
                    seed: config.seed,
                    best_val_loss: o.best_val_loss,
                    best_epoch: o.best_epoch,
                    epochs: o.history.len(),
                    val_auroc,
                    error: None,
                });
                if o.best_val_loss < report.best_val_loss {
                    report.best_val_loss = o.best_val_loss;
                    report.val_auroc = val_auroc;
                }
                if best.as_ref().is_none_or(|(l, _, _)| o.best_val_loss < *l) {
                    best = Some((o.best_val_loss, o, config));
                }
            }
            Err(e) => report.runs.push(GridRun {
                seed: config.seed,
                best_val_loss: f64::INFINITY,
                best_epoch: 0,
                epochs: 0,
                val_auroc: None,
                error: Some(e.to_string()),
            }),
        }
    }
    let (_, best, best_config) =
        best.ok_or_else(|| Error::Divergence("every grid run failed".to_string()))?;
    reports.sort_by(|a, b| a.best_val_loss.total_cmp(&b.best_val_loss).then(a.cell.index.cmp(&b.cell.index)));
    Ok(GridReport {
        cells: reports,
        best,
        best_config,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerunSummary {
    pub cell: GridCell,
    pub test1: Vec<AurocSummary>,
    pub test2: Vec<AurocSummary>,
    pub test1_mean: f64,
    pub test1_std: f64,
    pub test2_mean: f64,
    pub test2_std: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let s = if xs.len() > 1 {
        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (m, s)
}

/// Re-trains one cell `k` times with fresh seeds and reports test AUROC
/// mean and standard deviation across runs.
pub fn rerun_cell(
    space: &GridSpace,
    cell: &GridCell,
    dataset: &Dataset,
    base: &TrainConfig,
    k: usize,
) -> Result<RerunSummary> {
    let mask = dataset.entry_mask();
    let runs: Vec<(AurocSummary, AurocSummary)> = (0..k)
        .into_par_iter()
        .map(|i| {
            let config = cell.config(base, seed::derive(base.seed, RERUN_TAG, i as u64));
            let o = run_once(space, dataset, &config)?;
            let eval = |split| -> Result<AurocSummary> {
                let samples = dataset.split(split);
                Ok(split_auroc(&score_samples(&o.model, samples)?, samples, &mask))
            };
            Ok((eval(SplitKind::Test1)?, eval(SplitKind::Test2)?))
        })
        .collect::<Result<_>>()?;
    let (test1, test2): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    let (test1_mean, test1_std) = mean_std(&test1.iter().map(|a| a.mean).collect::<Vec<_>>());
    let (test2_mean, test2_std) = mean_std(&test2.iter().map(|a| a.mean).collect::<Vec<_>>());
    Ok(RerunSummary {
        cell: *cell,
        test1,
        test2,
        test1_mean,
        test1_std,
        test2_mean,
        test2_std,
    })
}
