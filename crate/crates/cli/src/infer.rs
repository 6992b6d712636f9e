use std::io::Write;
use std::path::{Path, PathBuf};

use causalpt::nn::{load_checkpoint, predict_distribution, predict_windowed, ModelParams};
use causalpt::series::Series;
use causalpt::Error;
use clap::{Args, ValueEnum};

use crate::Result;

/// How a series is brought to the model's bound length T.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FitMode {
    /// Score every window of length T at the given stride and average.
    Window,
    /// Keep only the first T rows.
    Truncate,
    /// Repeat the series cyclically up to T rows when it is shorter.
    Tile,
}

#[derive(Args)]
pub struct InferArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// CSV with a header row and one numeric column per variable.
    #[arg(long)]
    csv: PathBuf,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "window")]
    fit: FitMode,
    /// Window stride; defaults to the model length T.
    #[arg(long)]
    stride: Option<usize>,
    /// Emit the lag-1 summary graph `i,j,score` instead of every lag.
    #[arg(long)]
    summary: bool,
    /// Per-edge mean and standard deviation across windows instead of a
    /// single averaged score.
    #[arg(long)]
    distribution: bool,
    /// Input is already scaled to [0, 1].
    #[arg(long)]
    no_normalize: bool,
}

pub fn read_csv_series(path: &Path) -> Result<Series> {
    let data_err = |msg: String| Error::Data(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_err(e.to_string()))?;
    let cols = reader.headers().map_err(|e| data_err(e.to_string()))?.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| data_err(e.to_string()))?;
        for (c, cell) in record.iter().enumerate() {
            let x: f64 = cell
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite())
                .ok_or_else(|| data_err(format!("row {}, column {}: '{cell}' is not a finite number", r + 1, c + 1)))?;
            values.push(x);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(data_err("no data rows".into()));
    }
    Series::new(rows, cols, values)
}

/// Applies `mode` so that windowed scoring sees at least T rows.
pub fn fit_length(series: &Series, t: usize, mode: FitMode) -> Result<Series> {
    let len = series.len();
    match mode {
        FitMode::Window if len >= t => Ok(series.clone()),
        FitMode::Truncate if len >= t => series.window(0, t),
        FitMode::Tile => {
            let target = len.max(t);
            let v = series.num_vars();
            let data = (0..target).flat_map(|k| series.row(k % len).to_vec()).collect();
            Series::new(target, v, data)
        }
        _ => Err(Error::Data(format!(
            "series has {len} rows but the model needs at least {t} (try --fit tile)"
        ))),
    }
}

fn write_rows(out: &mut dyn Write, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io_err = |e: csv::Error| Error::Data(format!("writing scores: {e}"));
    w.write_record(header).map_err(io_err)?;
    for r in rows {
        w.write_record(&r).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::Data(format!("writing scores: {e}")))
}

/// Long-format rows over `(i, j, lag)`, restricted to lag 1 under `summary`.
fn score_rows(model: &ModelParams, summary: bool, columns: &[&[f64]]) -> Vec<Vec<String>> {
    let (v, n) = (model.dims.num_vars, model.dims.max_lag);
    let mut rows = Vec::new();
    for i in 0..v {
        for j in 0..v {
            for lag in 1..=n {
                if summary && lag != 1 {
                    continue;
                }
                let k = (i * v + j) * n + lag - 1;
                let mut row = vec![i.to_string(), j.to_string()];
                if !summary {
                    row.push(lag.to_string());
                }
                row.extend(columns.iter().map(|c| c[k].to_string()));
                rows.push(row);
            }
        }
    }
    rows
}

pub fn infer(a: InferArgs) -> Result<()> {
    let model = load_checkpoint(&a.checkpoint)?;
    let raw = read_csv_series(&a.csv)?;
    if raw.num_vars() != model.dims.num_vars {
        return Err(Error::Data(format!(
            "CSV has {} columns but the checkpoint was trained on V={}",
            raw.num_vars(),
            model.dims.num_vars
        )));
    }
    let t = model.dims.series_len;
    let series = fit_length(&raw, t, a.fit)?;
    let stride = a.stride.unwrap_or(t);
    let normalize = !a.no_normalize;
    let base: Vec<&str> = if a.summary { vec!["i", "j"] } else { vec!["i", "j", "lag"] };
    let (header, rows) = if a.distribution {
        if !normalize {
            return Err(Error::Config("--distribution always normalizes each window; drop --no-normalize".into()));
        }
        let dist = predict_distribution(&model, &series, t, stride)?;
        let header = [base.as_slice(), &["mean", "std"]].concat();
        (header, score_rows(&model, a.summary, &[&dist.mean, &dist.std]))
    } else {
        let g = predict_windowed(&model, &series, stride, normalize)?;
        let header = [base.as_slice(), &["score"]].concat();
        (header, score_rows(&model, a.summary, &[g.values()]))
    };
    match &a.out {
        Some(path) => {
            let mut f = std::fs::File::create(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            write_rows(&mut f, &header, rows)
        }
        None => write_rows(&mut std::io::stdout().lock(), &header, rows),
    }
}
