//! Windowed inference over series longer than the model's bound length.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::model::ModelParams;
use crate::series::Series;
use crate::stats::GraphScores;

/// Window start offsets `0, stride, 2·stride, …` that fit in `total`.
pub fn window_starts(total: usize, window: usize, stride: usize) -> Result<Vec<usize>> {
    if window == 0 || stride == 0 {
        return Err(Error::config("window length and stride must be positive"));
    }
    if window > total {
        return Err(Error::data(format!(
            "window length {window} exceeds series length {total}"
        )));
    }
    Ok((0..=total - window).step_by(stride).collect())
}

/// Per-edge score samples across windows, in `GraphScores` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDistribution {
    pub num_vars: usize,
    pub max_lag: usize,
    pub windows: usize,
    pub samples: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// Sample standard deviation (n−1).
    pub std: Vec<f64>,
}

fn window_outputs(
    params: &ModelParams,
    series: &Series,
    stride: usize,
    normalize: bool,
) -> Result<Vec<GraphScores>> {
    let w = params.dims.series_len;
    let windows: Vec<Series> = window_starts(series.len(), w, stride)?
        .into_iter()
        .map(|s| {
            let win = series.window(s, s + w)?;
            Ok(if normalize { win.normalize_minmax() } else { win })
        })
        .collect::<Result<_>>()?;
    let refs: Vec<&Series> = windows.iter().collect();
    Ok(params
        .forward_batch(&refs, 64)?
        .into_iter()
        .map(|o| o.graph)
        .collect())
}

/// Scores every window (each min-max normalized) and returns the per-edge
/// mean. A series of exactly the model length yields one window.
pub fn predict_windowed(
    params: &ModelParams,
    series: &Series,
    stride: usize,
    normalize: bool,
) -> Result<GraphScores> {
    let outs = window_outputs(params, series, stride, normalize)?;
    let e = params.dims.graph_len();
    let mut mean = vec![0.0; e];
    for g in &outs {
        for (m, v) in mean.iter_mut().zip(g.values()) {
            *m += v;
        }
    }
    let n = outs.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    GraphScores::new(params.dims.num_vars, params.dims.max_lag, mean)
}

/// Runs many windows of one series through the model and collects the
/// distribution of each edge score.
pub fn predict_distribution(
    params: &ModelParams,
    series: &Series,
    window_length: usize,
    stride: usize,
) -> Result<EdgeDistribution> {
    if window_length != params.dims.series_len {
        return Err(Error::config(format!(
            "window length {window_length} differs from the model's bound length {}",
            params.dims.series_len
        )));
    }
    let outs = window_outputs(params, series, stride, true)?;
    if outs.len() < 2 {
        return Err(Error::data(format!(
            "a distribution needs at least 2 windows, got {}",
            outs.len()
        )));
    }
    let e = params.dims.graph_len();
    let samples: Vec<Vec<f64>> = (0..e)
        .map(|k| outs.iter().map(|g| g.values()[k]).collect())
        .collect();
    let n = outs.len() as f64;
    let mean: Vec<f64> = samples.iter().map(|s| s.iter().sum::<f64>() / n).collect();
    let std = samples
        .iter()
        .zip(&mean)
        .map(|(s, m)| (s.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
        .collect();
    Ok(EdgeDistribution {
        num_vars: params.dims.num_vars,
        max_lag: params.dims.max_lag,
        windows: outs.len(),
        samples,
        mean,
        std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::model::{init_params, Architecture, ModelDims, ModelFlags, SizePreset};

    fn model(t: usize) -> ModelParams {
        let dims = ModelDims {
            num_vars: 2,
            max_lag: 1,
            series_len: t,
        };
        init_params(Architecture::Mlp, SizePreset::Small, dims, ModelFlags::default(), 1).unwrap()
    }

    fn series(len: usize) -> Series {
        Series::new(len, 2, (0..len * 2).map(|k| ((k * 7919) % 101) as f64).collect()).unwrap()
    }

    #[test]
    fn starts() {
        assert_eq!(window_starts(10, 4, 3).unwrap(), vec![0, 3, 6]);
        assert_eq!(window_starts(10, 10, 1).unwrap(), vec![0]);
        assert!(window_starts(3, 4, 1).is_err());
        assert!(window_starts(3, 2, 0).is_err());
    }

    #[test]
    fn constant_model_has_zero_variance() {
        let mut p = model(8);
        for t in &mut p.tensors {
            t.values.iter_mut().for_each(|v| *v = 0.0);
        }
        p.tensor_mut("b_out").unwrap().values = vec![0.4, -1.0, 2.0, 0.0];
        let d = predict_distribution(&p, &series(30), 8, 2).unwrap();
        assert_eq!(d.windows, 12);
        assert!(d.std.iter().all(|&s| s < 1e-15), "{:?}", d.std);
        assert!(d.samples.iter().all(|s| s.len() == 12));
    }

    #[test]
    fn single_window_is_degenerate() {
        let p = model(8);
        let s = series(20);
        assert!(matches!(predict_distribution(&p, &s, 8, 13), Err(Error::Data(_))));
        assert!(predict_distribution(&p, &s, 8, 12).is_ok());
        assert!(predict_distribution(&p, &s, 9, 1).is_err());
    }

    #[test]
    fn windowed_mean_matches_distribution_mean() {
        let p = model(8);
        let s = series(40);
        let d = predict_distribution(&p, &s, 8, 4).unwrap();
        let w = predict_windowed(&p, &s, 4, true).unwrap();
        for (a, b) in d.mean.iter().zip(w.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let single = predict_windowed(&p, &s.window(0, 8).unwrap(), 8, true).unwrap();
        assert_eq!(single, p.forward(&s.window(0, 8).unwrap().normalize_minmax()).unwrap().graph);
    }
}
