//! Shared fixtures for the benchmarks.

use causalpt::nn::{init_params, Architecture, ModelDims, ModelParams, SizePreset};
use causalpt::semgen::{builtin_config, generate_dataset, Dataset};
use causalpt::training::TrainConfig;

/// A preset with `n` test samples and token train/val splits.
pub fn test_split(preset: &str, n: usize) -> Dataset {
    let c = builtin_config(preset).expect("known preset").with_sizes(1, 1, n);
    generate_dataset(&c).expect("preset generates")
}

/// An untrained model sized for `dataset` with the default training flags.
pub fn model_for(dataset: &Dataset, arch: Architecture) -> ModelParams {
    let dims = ModelDims {
        num_vars: dataset.num_vars,
        max_lag: dataset.max_lag,
        series_len: dataset.series_len,
    };
    init_params(arch, SizePreset::Small, dims, TrainConfig::default().model_flags(), 0).expect("valid dims")
}
