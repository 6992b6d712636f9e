use std::path::PathBuf;

use causalpt::baselines::Baseline;
use causalpt::nn::load_checkpoint;
use causalpt::semgen::{read_dataset, SplitKind};
use causalpt::series::Series;
use causalpt::stats::AurocSummary;
use causalpt::training::{score_samples, split_auroc};
use causalpt::Error;
use clap::Args;
use serde::Serialize;

use crate::{print_json, write_json, Result};

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// train, val, test1 or test2.
    #[arg(long, default_value = "test1")]
    split: SplitKind,
    /// Skip the CT and GVAR columns.
    #[arg(long)]
    no_baselines: bool,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Column {
    mean: f64,
    std: f64,
    evaluated: usize,
    /// Samples whose labels are all one class.
    skipped: usize,
}

impl From<AurocSummary> for Column {
    fn from(a: AurocSummary) -> Self {
        Column {
            mean: a.mean,
            std: a.std,
            evaluated: a.evaluated,
            skipped: a.skipped,
        }
    }
}

#[derive(Serialize)]
struct EvalReport {
    dataset: String,
    split: SplitKind,
    samples: usize,
    ignore_diagonal: bool,
    model: Column,
    #[serde(skip_serializing_if = "Option::is_none")]
    ct: Option<Column>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gvar: Option<Column>,
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let model = load_checkpoint(&a.checkpoint)?;
    let dataset = read_dataset(&a.data)?;
    let d = &model.dims;
    if (d.num_vars, d.max_lag, d.series_len) != (dataset.num_vars, dataset.max_lag, dataset.series_len) {
        return Err(Error::Data(format!(
            "checkpoint expects V={} N={} T={}, dataset has V={} N={} T={}",
            d.num_vars, d.max_lag, d.series_len, dataset.num_vars, dataset.max_lag, dataset.series_len
        )));
    }
    let samples = dataset.split(a.split);
    if samples.is_empty() {
        return Err(Error::Data(format!("split {} is empty", a.split)));
    }
    let mask = dataset.entry_mask();
    let model_col = split_auroc(&score_samples(&model, samples)?, samples, &mask);
    let baseline = |b: Baseline| -> Result<Column> {
        let series: Vec<&Series> = samples.iter().map(|s| &s.series).collect();
        let scores = b.score_all(&series, dataset.max_lag)?;
        Ok(split_auroc(&scores, samples, &mask).into())
    };
    let (ct, gvar) = if a.no_baselines {
        (None, None)
    } else {
        (Some(baseline(Baseline::Ct)?), Some(baseline(Baseline::Gvar)?))
    };
    let report = EvalReport {
        dataset: dataset.source.name(),
        split: a.split,
        samples: samples.len(),
        ignore_diagonal: dataset.ignore_diagonal,
        model: model_col.into(),
        ct,
        gvar,
    };
    if let Some(path) = &a.out {
        write_json(path, &report)?;
    }
    print_json(&report);
    Ok(())
}
