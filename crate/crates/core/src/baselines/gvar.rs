use nalgebra::{DMatrix, SVD};

use crate::error::{Error, Result};
use crate::series::Series;
use crate::stats::GraphScores;

/// Least-squares VAR(N) fit with intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct GvarFit {
    pub num_vars: usize,
    pub max_lag: usize,
    /// Signed coefficients in `[i][j][lag]` order.
    pub coefficients: Vec<f64>,
    pub intercepts: Vec<f64>,
    /// Design matrix was numerically rank deficient; the minimum-norm
    /// solution was returned.
    pub rank_deficient: bool,
}

impl GvarFit {
    pub fn coefficient(&self, i: usize, j: usize, lag: usize) -> f64 {
        self.coefficients[(i * self.num_vars + j) * self.max_lag + (lag - 1)]
    }

    /// `|coefficient|` scaled by the largest magnitude into `[0, 1]`.
    pub fn scores(&self) -> GraphScores {
        let max = self.coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let values = self
            .coefficients
            .iter()
            .map(|c| if max > 0.0 { (c.abs() / max).min(1.0) } else { 0.0 })
            .collect();
        GraphScores::new(self.num_vars, self.max_lag, values).expect("scaled into [0, 1]")
    }
}

/// Fits `x_i^t = c_i + Σ_j Σ_n β_ijn x_j^{t-n}` for all targets over
/// `t = N..T-1` with Householder QR; falls back to the SVD minimum-norm
/// solution when R is numerically singular.
pub fn gvar_fit(series: &Series, max_lag: usize) -> Result<GvarFit> {
    let v = series.num_vars();
    let t = series.len();
    let cols = 1 + v * max_lag;
    if max_lag == 0 || t <= max_lag || t - max_lag <= cols {
        return Err(Error::data(format!(
            "VAR({max_lag}) on {v} variables needs more than {} rows, series has {}",
            cols + max_lag,
            t
        )));
    }
    let rows = t - max_lag;
    // Column order: intercept, then (j, lag) with lag fastest.
    let design = DMatrix::from_fn(rows, cols, |r, c| {
        if c == 0 {
            1.0
        } else {
            let j = (c - 1) / max_lag;
            let lag = (c - 1) % max_lag + 1;
            series.get(r + max_lag - lag, j)
        }
    });
    let targets = DMatrix::from_fn(rows, v, |r, i| series.get(r + max_lag, i));

    let qr = design.clone().qr();
    let r = qr.r();
    let max_diag = (0..cols).map(|k| r[(k, k)].abs()).fold(0.0, f64::max);
    let tol = max_diag * (rows.max(cols) as f64) * f64::EPSILON;
    let rank_deficient = max_diag == 0.0 || (0..cols).any(|k| r[(k, k)].abs() <= tol);

    let beta = if rank_deficient {
        let svd = SVD::new(design, true, true);
        let eps = svd.singular_values.max() * (rows.max(cols) as f64) * f64::EPSILON;
        svd.solve(&targets, eps.max(f64::MIN_POSITIVE))
            .map_err(|e| Error::data(format!("least squares failed: {e}")))?
    } else {
        let qty = qr.q().transpose() * &targets;
        r.solve_upper_triangular(&qty)
            .ok_or_else(|| Error::data("singular triangular factor"))?
    };

    let mut coefficients = vec![0.0; v * v * max_lag];
    for i in 0..v {
        for j in 0..v {
            for lag in 1..=max_lag {
                coefficients[(i * v + j) * max_lag + (lag - 1)] = beta[(1 + j * max_lag + (lag - 1), i)];
            }
        }
    }
    let intercepts = (0..v).map(|i| beta[(0, i)]).collect();
    Ok(GvarFit {
        num_vars: v,
        max_lag,
        coefficients,
        intercepts,
        rank_deficient,
    })
}

/// VAR coefficient magnitudes as edge scores.
pub fn gvar(series: &Series, max_lag: usize) -> Result<GraphScores> {
    Ok(gvar_fit(series, max_lag)?.scores())
}
