use std::path::PathBuf;

use causalpt::semgen::{
    builtin_config, generate_dataset, generate_kuramoto_dataset, write_dataset, Dataset, DatasetConfig,
    KuramotoConfig, Observable,
};
use causalpt::Error;
use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::{print_json, Result};

#[derive(Args)]
pub struct GenArgs {
    /// Built-in preset (SL, ML, SNL, MNL, LNL, XLNL, Wide7, Wide10, Wide15, Pre).
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    preset: Option<String>,
    /// JSON file holding a full dataset config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_val: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    /// Replace an existing dataset directory.
    #[arg(long)]
    force: bool,
}

#[derive(Serialize)]
struct DatasetSummary {
    name: String,
    out: PathBuf,
    num_vars: usize,
    max_lag: usize,
    series_len: usize,
    train: usize,
    val: usize,
    test1: usize,
    test2: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    trivial: Option<bool>,
}

fn summary(d: &Dataset, out: PathBuf, trivial: Option<bool>) -> DatasetSummary {
    DatasetSummary {
        name: d.source.name(),
        out,
        num_vars: d.num_vars,
        max_lag: d.max_lag,
        series_len: d.series_len,
        train: d.train.len(),
        val: d.val.len(),
        test1: d.test1.len(),
        test2: d.test2.len(),
        trivial,
    }
}

pub fn gen(a: GenArgs) -> Result<()> {
    let mut config: DatasetConfig = match (&a.preset, &a.config) {
        (Some(p), _) => builtin_config(p)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        (None, None) => unreachable!("clap requires one of --preset and --config"),
    };
    if let Some(s) = a.seed {
        config.master_seed = s;
    }
    config.n_train = a.n_train.unwrap_or(config.n_train);
    config.n_val = a.n_val.unwrap_or(config.n_val);
    config.n_test = a.n_test.unwrap_or(config.n_test);
    let dataset = generate_dataset(&config)?;
    write_dataset(&dataset, &a.out, a.force)?;
    print_json(&summary(&dataset, a.out, None));
    Ok(())
}

#[derive(Clone, Copy, ValueEnum)]
enum ObservableArg {
    Sine,
    Phase,
}

#[derive(Args)]
pub struct KuramotoArgs {
    #[arg(long)]
    out: PathBuf,
    /// Number of oscillators.
    #[arg(long)]
    vars: Option<usize>,
    /// Coupling strength K; 0 gives a trivial dataset.
    #[arg(long)]
    coupling: Option<f64>,
    #[arg(long)]
    connection_probability: Option<f64>,
    #[arg(long)]
    len: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    record_every: Option<usize>,
    #[arg(long, value_enum)]
    observable: Option<ObservableArg>,
    #[arg(long)]
    max_lag: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_val: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    /// Score self-coupling entries too (excluded by default).
    #[arg(long)]
    keep_diagonal: bool,
    #[arg(long)]
    force: bool,
}

pub fn kuramoto(a: KuramotoArgs) -> Result<()> {
    let d = KuramotoConfig::default();
    let config = KuramotoConfig {
        num_vars: a.vars.unwrap_or(d.num_vars),
        coupling_strength: a.coupling.unwrap_or(d.coupling_strength),
        connection_probability: a.connection_probability.unwrap_or(d.connection_probability),
        series_len: a.len.unwrap_or(d.series_len),
        dt: a.dt.unwrap_or(d.dt),
        record_every: a.record_every.unwrap_or(d.record_every),
        observable: match a.observable {
            Some(ObservableArg::Sine) => Observable::Sine,
            Some(ObservableArg::Phase) => Observable::Phase,
            None => d.observable,
        },
        max_lag: a.max_lag.unwrap_or(d.max_lag),
        master_seed: a.seed.unwrap_or(d.master_seed),
        n_train: a.n_train.unwrap_or(d.n_train),
        n_val: a.n_val.unwrap_or(d.n_val),
        n_test: a.n_test.unwrap_or(d.n_test),
        ..d
    };
    let mut dataset = generate_kuramoto_dataset(&config)?;
    if a.keep_diagonal {
        dataset.ignore_diagonal = false;
    }
    write_dataset(&dataset, &a.out, a.force)?;
    if config.is_trivial() {
        eprintln!("warning: no coupling, the graphs carry no signal");
    }
    print_json(&summary(&dataset, a.out, Some(config.is_trivial())));
    Ok(())
}
