use std::path::PathBuf;
use std::time::Instant;

use causalpt::baselines::Baseline;
use causalpt::nn::{load_checkpoint, ModelParams};
use causalpt::semgen::{read_dataset, SplitKind};
use causalpt::series::Series;
use causalpt::Error;
use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::{print_json, write_json, Result};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ThreadMode {
    Single,
    Multi,
    Both,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "test1")]
    split: SplitKind,
    /// Network batch sizes to time, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,64,500")]
    batch_sizes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    repetitions: usize,
    #[arg(long, value_enum, default_value = "both")]
    threads: ThreadMode,
    /// Also write the JSON report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    pub repetitions: usize,
    /// Seconds per full pass over the split.
    pub mean_s: f64,
    pub std_s: f64,
    pub total_s: f64,
}

#[derive(Serialize)]
struct ModeReport {
    threads: usize,
    timings: Vec<Timing>,
}

#[derive(Serialize)]
struct BenchReport {
    split: SplitKind,
    samples: usize,
    architecture: String,
    param_count: usize,
    modes: Vec<ModeReport>,
}

fn time(method: &str, batch_size: Option<usize>, reps: usize, mut f: impl FnMut() -> Result<()>) -> Result<Timing> {
    let mut secs = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t = Instant::now();
        f()?;
        secs.push(t.elapsed().as_secs_f64());
    }
    let n = reps as f64;
    let mean = secs.iter().sum::<f64>() / n;
    let std = if reps > 1 {
        (secs.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(Timing {
        method: method.to_string(),
        batch_size,
        repetitions: reps,
        mean_s: mean,
        std_s: std,
        total_s: secs.iter().sum(),
    })
}

fn run_mode(model: &ModelParams, series: &[&Series], max_lag: usize, a: &BenchArgs) -> Result<Vec<Timing>> {
    let mut out = Vec::new();
    for &b in &a.batch_sizes {
        out.push(time("cpnn", Some(b), a.repetitions, || {
            model.forward_batch(series, b).map(|_| ())
        })?);
    }
    for baseline in Baseline::ALL {
        out.push(time(baseline.name(), None, a.repetitions, || {
            baseline.score_all(series, max_lag).map(|_| ())
        })?);
    }
    Ok(out)
}

pub fn bench(a: BenchArgs) -> Result<()> {
    if a.repetitions == 0 || a.batch_sizes.iter().any(|&b| b == 0) {
        return Err(Error::Config("repetitions and batch sizes must be positive".into()));
    }
    let model = load_checkpoint(&a.checkpoint)?;
    let dataset = read_dataset(&a.data)?;
    let samples = dataset.split(a.split);
    if samples.is_empty() {
        return Err(Error::Data(format!("split {} is empty", a.split)));
    }
    let series: Vec<&Series> = samples.iter().map(|s| &s.series).collect();
    let counts: Vec<usize> = match a.threads {
        ThreadMode::Single => vec![1],
        ThreadMode::Multi => vec![rayon::current_num_threads()],
        ThreadMode::Both => vec![1, rayon::current_num_threads()],
    };
    let mut modes = Vec::new();
    for threads in counts {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("cannot build a {threads}-thread pool: {e}")))?;
        let timings = pool.install(|| run_mode(&model, &series, dataset.max_lag, &a))?;
        modes.push(ModeReport { threads, timings });
    }
    let report = BenchReport {
        split: a.split,
        samples: samples.len(),
        architecture: model.architecture.to_string(),
        param_count: model.param_count(),
        modes,
    };
    if let Some(path) = &a.out {
        write_json(path, &report)?;
    }
    print_json(&report);
    Ok(())
}
