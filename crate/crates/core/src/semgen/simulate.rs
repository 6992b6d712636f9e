use nalgebra::{DMatrix, Schur};
use rand_distr::{Distribution, Normal};

use crate::error::Error;
use crate::seed::{self, Rng};
use crate::semgen::config::DatasetConfig;
use crate::semgen::functions::{EdgeFn, FunctionSetId};
use crate::semgen::structure::CoeffTensor;
use crate::series::Series;

/// Any pre-normalization magnitude beyond this marks a diverged simulation.
pub const MAGNITUDE_GUARD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub series_len: usize,
    pub burn_in: usize,
    pub noise_variance: f64,
    pub function_set: FunctionSetId,
}

impl SimParams {
    pub fn from_config(config: &DatasetConfig) -> Self {
        Self {
            series_len: config.series_len,
            burn_in: config.burn_in,
            noise_variance: config.noise_variance,
            function_set: config.function_set,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diverged {
    pub step: usize,
    pub value: f64,
}

impl From<Diverged> for Error {
    fn from(d: Diverged) -> Self {
        Error::Divergence(format!("value {} at step {}", d.value, d.step))
    }
}

/// Simulates the structural equation model with the config's noise level.
pub fn simulate_series(
    coeffs: &CoeffTensor,
    config: &DatasetConfig,
    seed: u64,
) -> std::result::Result<Series, Diverged> {
    let mut rng = seed::rng(seed);
    simulate_with(coeffs, &SimParams::from_config(config), &mut rng)
}

/// Runs `max(N, burn_in) + series_len` steps and returns the last
/// `series_len`. The first N steps are pure noise; every later step is
///
/// `x_i^t = Σ_n Σ_j f_ij^n(A[i][j][n] · x_j^{t-n}) + e_i^t`
///
/// with noise drawn in variable order after the deterministic part.
pub(crate) fn simulate_with(
    coeffs: &CoeffTensor,
    params: &SimParams,
    rng: &mut Rng,
) -> std::result::Result<Series, Diverged> {
    let v = coeffs.num_vars();
    let n = coeffs.max_lag();
    let warm = n.max(params.burn_in);
    let total = warm + params.series_len;
    let noise = Normal::new(0.0, params.noise_variance.sqrt()).expect("positive variance");

    // Resolve edges once: (i, j, lag, coefficient, function), Σ_n outer, Σ_j inner.
    let fns = params.function_set.functions();
    let mut edges: Vec<Vec<(usize, usize, f64, EdgeFn)>> = vec![Vec::new(); v];
    for (i, row) in edges.iter_mut().enumerate() {
        for lag in 1..=n {
            for j in 0..v {
                let a = coeffs.get(i, j, lag);
                if a != 0.0 {
                    let f = fns
                        .get(coeffs.func_id(i, j, lag) as usize)
                        .copied()
                        .unwrap_or(EdgeFn::Identity);
                    row.push((j, lag, a, f));
                }
            }
        }
    }

    let mut x = vec![0.0f64; total * v];
    for t in 0..total {
        for i in 0..v {
            let mut acc = 0.0;
            if t >= n {
                for &(j, lag, a, f) in &edges[i] {
                    acc += f.apply(a * x[(t - lag) * v + j]);
                }
            }
            let value = acc + noise.sample(rng);
            if !value.is_finite() || value.abs() > MAGNITUDE_GUARD {
                return Err(Diverged { step: t, value });
            }
            x[t * v + i] = value;
        }
    }
    Ok(Series::new(params.series_len, v, x.split_off(warm * v)).expect("sized above"))
}

/// Spectral radius of the VAR(N) companion matrix built from `coeffs`.
pub fn companion_spectral_radius(coeffs: &CoeffTensor) -> f64 {
    let v = coeffs.num_vars();
    let n = coeffs.max_lag();
    let dim = v * n;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for lag in 1..=n {
        for i in 0..v {
            for j in 0..v {
                m[(i, (lag - 1) * v + j)] = coeffs.get(i, j, lag);
            }
        }
    }
    for k in v..dim {
        m[(k, k - v)] = 1.0;
    }
    match Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER) {
        Some(schur) => schur
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max),
        None => gelfand_radius(m),
    }
}

const SCHUR_MAX_ITER: usize = 10_000;

/// `‖M^(2^k)‖^(1/2^k)` by repeated squaring, rescaling each step to stay finite.
fn gelfand_radius(mut m: DMatrix<f64>) -> f64 {
    let mut log_scale = 0.0;
    let mut power = 1.0;
    for _ in 0..40 {
        let norm = m.norm();
        if norm == 0.0 {
            return 0.0;
        }
        m /= norm;
        log_scale += norm.ln() / power;
        m = &m * &m;
        power *= 2.0;
    }
    let norm = m.norm();
    if norm == 0.0 {
        return log_scale.exp();
    }
    (log_scale + norm.ln() / power).exp()
}

/// Accepts a simulation iff it stayed finite and under the magnitude guard,
/// and, for purely linear structures, the companion matrix is stable.
pub fn stability_check(
    coeffs: &CoeffTensor,
    raw: &std::result::Result<Series, Diverged>,
) -> bool {
    let Ok(series) = raw else {
        return false;
    };
    if !series.is_finite() || series.max_abs() >= MAGNITUDE_GUARD {
        return false;
    }
    if coeffs.is_linear() && coeffs.edge_count() > 0 {
        return companion_spectral_radius(coeffs) < 1.0;
    }
    true
}

pub fn normalize_minmax(raw: &Series) -> Series {
    raw.normalize_minmax()
}
