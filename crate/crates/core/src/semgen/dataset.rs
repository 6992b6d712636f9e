use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::semgen::config::{DatasetConfig, SplitKind};
use crate::semgen::functions::FunctionSetId;
use crate::semgen::kuramoto::KuramotoConfig;
use crate::semgen::simulate::{companion_spectral_radius, simulate_with, stability_check, SimParams};
use crate::semgen::structure::{draw_structure, CoeffTensor};
use crate::series::Series;

const PATTERN_TAG: u64 = 0x7061_7474;

/// One labelled series.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Min-max normalized, step-major.
    pub series: Series,
    pub coeffs: CoeffTensor,
    pub sample_seed: u64,
    /// Whether any present edge carries a non-identity function.
    pub nonlinear: bool,
}

impl Sample {
    pub fn labels(&self) -> Vec<bool> {
        self.coeffs.labels()
    }
}

/// Where a dataset came from; echoed verbatim into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    Sem(DatasetConfig),
    Kuramoto(KuramotoConfig),
}

impl DatasetSource {
    pub fn master_seed(&self) -> u64 {
        match self {
            DatasetSource::Sem(c) => c.master_seed,
            DatasetSource::Kuramoto(c) => c.master_seed,
        }
    }

    pub fn name(&self) -> String {
        match self {
            DatasetSource::Sem(c) => c.name.clone(),
            DatasetSource::Kuramoto(_) => "Kuramoto".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub source: DatasetSource,
    pub num_vars: usize,
    pub max_lag: usize,
    pub series_len: usize,
    pub function_set: FunctionSetId,
    /// Exclude `i == j` entries from evaluation.
    pub ignore_diagonal: bool,
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
    pub test1: Vec<Sample>,
    pub test2: Vec<Sample>,
}

impl Dataset {
    pub fn split(&self, kind: SplitKind) -> &[Sample] {
        match kind {
            SplitKind::Train => &self.train,
            SplitKind::Val => &self.val,
            SplitKind::Test1 => &self.test1,
            SplitKind::Test2 => &self.test2,
        }
    }

    pub(crate) fn split_mut(&mut self, kind: SplitKind) -> &mut Vec<Sample> {
        match kind {
            SplitKind::Train => &mut self.train,
            SplitKind::Val => &mut self.val,
            SplitKind::Test1 => &mut self.test1,
            SplitKind::Test2 => &mut self.test2,
        }
    }

    pub fn num_entries(&self) -> usize {
        self.num_vars * self.num_vars * self.max_lag
    }

    /// Evaluation mask over flat `[i][j][n]` entries.
    pub fn entry_mask(&self) -> Vec<bool> {
        entry_mask(self.num_vars, self.max_lag, self.ignore_diagonal)
    }
}

pub fn entry_mask(num_vars: usize, max_lag: usize, ignore_diagonal: bool) -> Vec<bool> {
    let mut mask = Vec::with_capacity(num_vars * num_vars * max_lag);
    for i in 0..num_vars {
        for j in 0..num_vars {
            for _ in 0..max_lag {
                mask.push(!(ignore_diagonal && i == j));
            }
        }
    }
    mask
}

/// Seed of sample `index` in `split`: a pure function of the master seed.
pub fn sample_seed(master_seed: u64, split: SplitKind, index: usize) -> u64 {
    seed::derive(master_seed, split.tag(), index as u64)
}

/// The edge pattern shared by all samples of a fixed-pattern dataset. Drawn
/// until the structure is stable even with every coefficient at the largest
/// magnitude any split can produce.
pub fn fixed_pattern(config: &DatasetConfig) -> Result<Vec<bool>> {
    let bound = config.coeff_range.1.max(config.shifted_coeff_range.1);
    let mut rng = seed::rng(seed::derive(config.master_seed, PATTERN_TAG, 0));
    for _ in 0..config.max_attempts {
        let pattern: Vec<bool> = (0..config.num_entries())
            .map(|_| rng.random::<f64>() < config.link_probability)
            .collect();
        let mut worst = CoeffTensor::zeros(config.num_vars, config.max_lag);
        let (v, n) = (config.num_vars, config.max_lag);
        for i in 0..v {
            for j in 0..v {
                for lag in 1..=n {
                    if pattern[worst.index(i, j, lag)] {
                        worst.set(i, j, lag, bound, 0);
                    }
                }
            }
        }
        if companion_spectral_radius(&worst) < 1.0 {
            return Ok(pattern);
        }
    }
    Err(Error::Divergence(format!(
        "no stable fixed pattern found for '{}' within {} attempts",
        config.name, config.max_attempts
    )))
}

/// Generates sample `index` of a split by rejection sampling.
pub fn generate_sample(
    config: &DatasetConfig,
    split: SplitKind,
    index: usize,
    pattern: Option<&[bool]>,
) -> Result<Sample> {
    let sample_seed = sample_seed(config.master_seed, split, index);
    let mut rng = seed::rng(sample_seed);
    let split_params = config.split_params(split);
    let sim = SimParams {
        noise_variance: split_params.noise_variance,
        ..SimParams::from_config(config)
    };
    for _ in 0..config.max_attempts {
        let allow_nl = rng.random::<f64>() < config.nonlinear_sample_fraction;
        let coeffs = draw_structure(config, split_params, pattern, allow_nl, &mut rng);
        let raw = simulate_with(&coeffs, &sim, &mut rng);
        if !stability_check(&coeffs, &raw) {
            continue;
        }
        let mut series = raw.expect("accepted simulations are Ok").normalize_minmax();
        series.round_to_f32();
        let nonlinear = !coeffs.is_linear();
        return Ok(Sample {
            series,
            coeffs,
            sample_seed,
            nonlinear,
        });
    }
    Err(Error::Divergence(format!(
        "{} sample {index} of '{}': no stable system within {} attempts",
        split, config.name, config.max_attempts
    )))
}

/// Generates all four splits. The output depends only on `config`.
pub fn generate_dataset(config: &DatasetConfig) -> Result<Dataset> {
    config.validate()?;
    let pattern = if config.fixed_pattern {
        Some(fixed_pattern(config)?)
    } else {
        None
    };
    let mut dataset = Dataset {
        source: DatasetSource::Sem(config.clone()),
        num_vars: config.num_vars,
        max_lag: config.max_lag,
        series_len: config.series_len,
        function_set: config.function_set,
        ignore_diagonal: false,
        train: Vec::new(),
        val: Vec::new(),
        test1: Vec::new(),
        test2: Vec::new(),
    };
    for split in SplitKind::ALL {
        let samples = (0..config.split_size(split))
            .into_par_iter()
            .map(|index| generate_sample(config, split, index, pattern.as_deref()))
            .collect::<Result<Vec<_>>>()?;
        *dataset.split_mut(split) = samples;
    }
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semgen::config::{builtin_config, DEFAULT_SERIES_LEN};
    use crate::semgen::simulate::MAGNITUDE_GUARD;

    fn small(name: &str) -> DatasetConfig {
        builtin_config(name).unwrap().with_sizes(60, 20, 20).with_seed(5)
    }

    #[test]
    fn split_sizes_and_ranges() {
        let d = generate_dataset(&small("SL")).unwrap();
        assert_eq!((d.train.len(), d.val.len(), d.test1.len(), d.test2.len()), (60, 20, 20, 20));
        for s in d.train.iter().chain(&d.test1) {
            for &x in s.coeffs.values() {
                assert!(x == 0.0 || (0.3 - 1e-7..=0.5 + 1e-7).contains(&x));
            }
        }
        for s in d.val.iter().chain(&d.test2) {
            for &x in s.coeffs.values() {
                assert!(x == 0.0 || (0.2 - 1e-7..=0.3 + 1e-7).contains(&x));
            }
        }
    }

    #[test]
    fn accepted_samples_are_normalized_and_stable() {
        for name in ["SL", "SNL", "XLNL"] {
            let d = generate_dataset(&small(name)).unwrap();
            for s in d.train.iter().chain(&d.test2) {
                assert!(s.series.is_finite());
                assert!(s.series.as_slice().iter().all(|&x| (0.0..=1.0).contains(&x)));
                assert_eq!(s.series.len(), DEFAULT_SERIES_LEN);
                if s.coeffs.is_linear() && s.coeffs.edge_count() > 0 {
                    assert!(companion_spectral_radius(&s.coeffs) < 1.0);
                }
            }
        }
        const { assert!(MAGNITUDE_GUARD == 1e6) };
    }

    #[test]
    fn deterministic_regeneration() {
        let c = small("SNL");
        assert_eq!(generate_dataset(&c).unwrap(), generate_dataset(&c).unwrap());
        let other = generate_dataset(&c.clone().with_seed(6)).unwrap();
        assert_ne!(generate_dataset(&c).unwrap().train, other.train);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let c = small("XLNL");
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| generate_dataset(&c)).unwrap();
        let b = four.install(|| generate_dataset(&c)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fixed_pattern_shared_across_samples() {
        let d = generate_dataset(&small("Pre")).unwrap();
        let first = d.train[0].labels();
        for s in d.train.iter().chain(&d.test1).chain(&d.test2) {
            assert_eq!(s.labels(), first);
        }
        let nonlinear = d.train.iter().filter(|s| s.nonlinear).count();
        assert!(nonlinear > 10 && nonlinear < 50, "{nonlinear} of 60 nonlinear");
    }

    #[test]
    fn unstable_config_gives_up() {
        let mut c = small("SL");
        c.link_probability = 1.0;
        c.coeff_range = (1.0, 1.5);
        c.max_attempts = 5;
        assert!(matches!(generate_dataset(&c), Err(Error::Divergence(_))));
    }

    #[test]
    fn diagonal_mask() {
        let m = entry_mask(2, 2, true);
        assert_eq!(m, vec![false, false, true, true, true, true, false, false]);
        assert!(entry_mask(2, 1, false).iter().all(|&b| b));
    }
}
