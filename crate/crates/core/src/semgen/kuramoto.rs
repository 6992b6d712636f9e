//! Coupled phase oscillators with a random directed coupling graph.
//!
//! `dθ_i/dt = ω_i + (K/V) Σ_j A_ij sin(θ_j − θ_i)`, integrated with explicit
//! Euler steps. The ground-truth graph is `A` placed at lag 1.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::semgen::config::SplitKind;
use crate::semgen::dataset::{sample_seed, Dataset, DatasetSource, Sample};
use crate::semgen::functions::FunctionSetId;
use crate::semgen::structure::CoeffTensor;
use crate::series::Series;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// `sin θ_i`, bounded and periodic.
    Sine,
    /// Unwrapped phase `θ_i`.
    Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KuramotoConfig {
    pub num_vars: usize,
    pub coupling_strength: f64,
    pub frequency_range: (f64, f64),
    pub dt: f64,
    /// Recorded steps per series.
    pub series_len: usize,
    /// Integration steps between recorded values.
    pub record_every: usize,
    pub connection_probability: f64,
    pub observable: Observable,
    /// Lag dimension of the emitted label tensor (graph sits at lag 1).
    pub max_lag: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub master_seed: u64,
}

impl Default for KuramotoConfig {
    fn default() -> Self {
        Self {
            num_vars: 5,
            coupling_strength: 2.0,
            frequency_range: (1.0, 10.0),
            dt: 0.01,
            series_len: 100,
            record_every: 10,
            connection_probability: 0.5,
            observable: Observable::Sine,
            max_lag: 1,
            n_train: 5000,
            n_val: 500,
            n_test: 500,
            master_seed: 0,
        }
    }
}

impl KuramotoConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.frequency_range;
        if self.num_vars == 0 || self.max_lag == 0 || self.series_len < 2 {
            return Err(Error::config("num_vars, max_lag must be positive and series_len >= 2"));
        }
        if !(self.dt > 0.0) || self.record_every == 0 {
            return Err(Error::config("dt and record_every must be positive"));
        }
        if !(lo <= hi) || !(0.0..=1.0).contains(&self.connection_probability) {
            return Err(Error::config("invalid frequency range or connection probability"));
        }
        Ok(())
    }

    /// No coupling means every graph is learnable only by chance.
    pub fn is_trivial(&self) -> bool {
        self.coupling_strength == 0.0 || self.connection_probability == 0.0
    }
}

/// Explicit Euler integration. `coupling[i * V + j]` is `A_ij`. Returns the
/// phase after every step, `steps + 1` rows including the initial state.
pub fn integrate_phases(
    omega: &[f64],
    coupling: &[f64],
    strength: f64,
    dt: f64,
    theta0: &[f64],
    steps: usize,
) -> Vec<Vec<f64>> {
    let v = omega.len();
    let scale = strength / v as f64;
    let mut theta = theta0.to_vec();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(theta.clone());
    let mut dtheta = vec![0.0; v];
    for _ in 0..steps {
        for i in 0..v {
            let mut acc = 0.0;
            for j in 0..v {
                let a = coupling[i * v + j];
                if a != 0.0 {
                    acc += a * (theta[j] - theta[i]).sin();
                }
            }
            dtheta[i] = omega[i] + scale * acc;
        }
        for i in 0..v {
            theta[i] += dt * dtheta[i];
        }
        out.push(theta.clone());
    }
    out
}

/// Simulates one sample using the config's master seed.
pub fn simulate_kuramoto(config: &KuramotoConfig) -> Result<Sample> {
    config.validate()?;
    Ok(simulate_kuramoto_seeded(config, config.master_seed))
}

pub fn simulate_kuramoto_seeded(config: &KuramotoConfig, sample_seed: u64) -> Sample {
    let v = config.num_vars;
    let mut rng = seed::rng(sample_seed);
    let mut coeffs = CoeffTensor::zeros(v, config.max_lag);
    let mut coupling = vec![0.0; v * v];
    for i in 0..v {
        for j in 0..v {
            let u: f64 = rng.random();
            if i != j && u < config.connection_probability {
                coupling[i * v + j] = 1.0;
                coeffs.set(i, j, 1, 1.0, 0);
            }
        }
    }
    let (lo, hi) = config.frequency_range;
    let omega: Vec<f64> = (0..v).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
    let theta0: Vec<f64> = (0..v)
        .map(|_| std::f64::consts::TAU * rng.random::<f64>())
        .collect();
    let steps = (config.series_len - 1) * config.record_every;
    let phases = integrate_phases(&omega, &coupling, config.coupling_strength, config.dt, &theta0, steps);

    let mut data = Vec::with_capacity(config.series_len * v);
    for row in phases.iter().step_by(config.record_every) {
        data.extend(row.iter().map(|&th| match config.observable {
            Observable::Sine => th.sin(),
            Observable::Phase => th,
        }));
    }
    let mut series = Series::new(config.series_len, v, data)
        .expect("sized by construction")
        .normalize_minmax();
    series.round_to_f32();
    Sample {
        series,
        coeffs,
        sample_seed,
        nonlinear: true,
    }
}

/// Train/val/test splits of Kuramoto samples. There is no shifted second
/// test set; the diagonal is excluded from evaluation.
pub fn generate_kuramoto_dataset(config: &KuramotoConfig) -> Result<Dataset> {
    config.validate()?;
    let split = |kind: SplitKind, n: usize| -> Vec<Sample> {
        (0..n)
            .into_par_iter()
            .map(|i| simulate_kuramoto_seeded(config, sample_seed(config.master_seed, kind, i)))
            .collect()
    };
    Ok(Dataset {
        source: DatasetSource::Kuramoto(config.clone()),
        num_vars: config.num_vars,
        max_lag: config.max_lag,
        series_len: config.series_len,
        function_set: FunctionSetId::L,
        ignore_diagonal: true,
        train: split(SplitKind::Train, config.n_train),
        val: split(SplitKind::Val, config.n_val),
        test1: split(SplitKind::Test1, config.n_test),
        test2: Vec::new(),
    })
}
