use std::path::PathBuf;

use causalpt::nn::{init_params, save_checkpoint, Architecture, ModelDims, SizePreset};
use causalpt::semgen::{read_dataset, Dataset};
use causalpt::training::{
    grid_search, rerun_cell, train_with_progress, write_jsonl, CellReport, GridSpace, RerunSummary,
    TrainConfig,
};
use causalpt::Error;
use clap::Args;
use serde::Serialize;

use crate::{print_json, write_json, Result};

/// Training hyperparameters shared by `train` and `grid`.
#[derive(Args, Clone)]
pub struct TrainFlags {
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    /// Weight of the edge-count regression term; 0 drops the count head.
    #[arg(long)]
    lambda_reg: Option<f64>,
    /// Weight of the correlation regularization term.
    #[arg(long)]
    lambda_cr: Option<f64>,
    #[arg(long)]
    cr_alpha: Option<f64>,
    #[arg(long)]
    cr_beta: Option<f64>,
    /// Do not feed |lcc| features to the output head.
    #[arg(long)]
    no_injection: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress per-epoch progress on stderr.
    #[arg(long)]
    quiet: bool,
}

impl TrainFlags {
    fn config(&self) -> Result<TrainConfig> {
        let d = TrainConfig::default();
        let c = TrainConfig {
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            learning_rate: self.lr.unwrap_or(d.learning_rate),
            weight_decay: self.weight_decay.unwrap_or(d.weight_decay),
            max_epochs: self.max_epochs.unwrap_or(d.max_epochs),
            patience: self.patience.unwrap_or(d.patience),
            lambda_reg: self.lambda_reg.unwrap_or(d.lambda_reg),
            lambda_cr: self.lambda_cr.unwrap_or(d.lambda_cr),
            cr_alpha: self.cr_alpha.unwrap_or(d.cr_alpha),
            cr_beta: self.cr_beta.unwrap_or(d.cr_beta),
            correlation_injection: !self.no_injection,
            seed: self.seed.unwrap_or(d.seed),
        };
        c.validate()?;
        Ok(c)
    }
}

fn parse_arch(s: &str) -> Result<Architecture> {
    s.parse()
}

fn parse_size(s: &str) -> Result<SizePreset> {
    s.parse()
}

fn dims(d: &Dataset) -> ModelDims {
    ModelDims {
        num_vars: d.num_vars,
        max_lag: d.max_lag,
        series_len: d.series_len,
    }
}

fn fingerprint(dataset: &Dataset, config: &TrainConfig) -> String {
    format!(
        "dataset={} seed={} config={}",
        dataset.source.name(),
        dataset.source.master_seed(),
        serde_json::to_string(config).expect("config serializes")
    )
}

#[derive(Args)]
pub struct TrainArgs {
    /// Dataset directory written by `gen` or `kuramoto`.
    #[arg(long)]
    data: PathBuf,
    /// mlp or ugru.
    #[arg(long, default_value = "mlp", value_parser = parse_arch)]
    arch: Architecture,
    /// small or medium.
    #[arg(long, default_value = "small", value_parser = parse_size)]
    size: SizePreset,
    /// Checkpoint directory; `history.jsonl` is written next to the weights.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    flags: TrainFlags,
}

#[derive(Serialize)]
struct TrainSummary {
    checkpoint: PathBuf,
    architecture: Architecture,
    param_count: usize,
    epochs: usize,
    best_epoch: usize,
    best_val_loss: f64,
    best_val_auroc: Option<f64>,
    stopped_early: bool,
}

pub fn train(a: TrainArgs) -> Result<()> {
    let config = a.flags.config()?;
    let dataset = read_dataset(&a.data)?;
    let model = init_params(a.arch, a.size, dims(&dataset), config.model_flags(), config.seed)?;
    let quiet = a.flags.quiet;
    let outcome = train_with_progress(model, &dataset, &config, &mut |r| {
        if !quiet {
            eprintln!(
                "epoch {:>3}  train {:.5}  val {:.5}  auroc {}{}",
                r.epoch,
                r.train_loss,
                r.val_loss,
                r.val_auroc.map_or("-".to_string(), |v| format!("{v:.4}")),
                if r.improved { "  *" } else { "" }
            );
        }
    })?;
    let manifest = save_checkpoint(&outcome.model, &a.out, Some(fingerprint(&dataset, &config)), a.force)?;
    write_jsonl(&a.out.join("history.jsonl"), &outcome.history)?;
    print_json(&TrainSummary {
        checkpoint: a.out,
        architecture: manifest.architecture,
        param_count: manifest.param_count,
        epochs: outcome.history.len(),
        best_epoch: outcome.best_epoch,
        best_val_loss: outcome.best_val_loss,
        best_val_auroc: outcome.history[outcome.best_epoch].val_auroc,
        stopped_early: outcome.stopped_early,
    });
    Ok(())
}

#[derive(Args)]
pub struct GridArgs {
    #[arg(long)]
    data: PathBuf,
    /// Architectures to search, comma separated.
    #[arg(long, default_value = "mlp,ugru", value_delimiter = ',', value_parser = parse_arch)]
    arch: Vec<Architecture>,
    #[arg(long, default_value = "small", value_parser = parse_size)]
    size: SizePreset,
    /// Output directory for `grid.jsonl`, `best/` and `rerun.json`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',')]
    batch_sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    lrs: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    weight_decays: Option<Vec<f64>>,
    /// Independent runs per cell.
    #[arg(long, default_value_t = 2)]
    runs: usize,
    /// Re-train the best cell this many times and report test AUROC mean/std.
    #[arg(long, default_value_t = 0)]
    rerun: usize,
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    flags: TrainFlags,
}

#[derive(Serialize)]
struct RankedCell<'a> {
    rank: usize,
    architecture: Architecture,
    #[serde(flatten)]
    report: &'a CellReport,
}

pub fn grid(a: GridArgs) -> Result<()> {
    let archs = a.arch.clone();
    if archs.is_empty() {
        return Err(Error::Config("--arch needs at least one architecture".into()));
    }
    let base = a.flags.config()?;
    let dataset = read_dataset(&a.data)?;
    let grid_file = a.out.join("grid.jsonl");
    if grid_file.exists() && !a.force {
        return Err(Error::Config(format!(
            "{} exists (use --force to overwrite)",
            grid_file.display()
        )));
    }
    std::fs::create_dir_all(&a.out).map_err(|e| Error::Io {
        path: a.out.clone(),
        source: e,
    })?;

    let mut ranked = Vec::new();
    let mut best = None;
    for arch in archs {
        let mut space = GridSpace::default_grid(arch, a.size);
        space.runs_per_cell = a.runs;
        if let Some(v) = &a.batch_sizes {
            space.batch_sizes = v.clone();
        }
        if let Some(v) = &a.lrs {
            space.learning_rates = v.clone();
        }
        if let Some(v) = &a.weight_decays {
            space.weight_decays = v.clone();
        }
        if !a.flags.quiet {
            eprintln!("{arch}: {} cells x {} runs", space.cells().len(), space.runs_per_cell);
        }
        let report = grid_search(&space, &dataset, &base)?;
        let loss = report.best.best_val_loss;
        for c in &report.cells {
            ranked.push((arch, c.clone()));
        }
        if best.as_ref().is_none_or(|(_, _, l, _)| loss < *l) {
            let cell = report.cells[0].cell;
            best = Some((space, report, loss, cell));
        }
    }
    ranked.sort_by(|a, b| a.1.best_val_loss.total_cmp(&b.1.best_val_loss));
    let lines: Vec<RankedCell> = ranked
        .iter()
        .enumerate()
        .map(|(rank, (architecture, report))| RankedCell {
            rank,
            architecture: *architecture,
            report,
        })
        .collect();
    write_jsonl(&grid_file, &lines)?;

    let (space, report, _, cell) = best.expect("at least one architecture ran");
    let best_dir = a.out.join("best");
    save_checkpoint(
        &report.best.model,
        &best_dir,
        Some(fingerprint(&dataset, &report.best_config)),
        a.force,
    )?;
    write_jsonl(&best_dir.join("history.jsonl"), &report.best.history)?;
    let rerun: Option<RerunSummary> = if a.rerun > 0 {
        let summary = rerun_cell(&space, &cell, &dataset, &base, a.rerun)?;
        write_json(&a.out.join("rerun.json"), &summary)?;
        Some(summary)
    } else {
        None
    };

    #[derive(Serialize)]
    struct GridSummary<'a> {
        cells: usize,
        best: &'a RankedCell<'a>,
        best_checkpoint: PathBuf,
        rerun: Option<RerunSummary>,
    }
    print_json(&GridSummary {
        cells: lines.len(),
        best: &lines[0],
        best_checkpoint: best_dir,
        rerun,
    });
    Ok(())
}
