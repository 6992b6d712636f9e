//! Synthetic causal time series from random structural equation models.

pub mod config;
pub mod dataset;
pub mod functions;
pub mod kuramoto;
pub mod simulate;
pub mod storage;
pub mod structure;

pub use config::{builtin_config, DatasetConfig, SplitKind, SplitParams, PRESET_NAMES};
pub use dataset::{entry_mask, generate_dataset, generate_sample, sample_seed, Dataset, DatasetSource, Sample};
pub use functions::{function_set, EdgeFn, FunctionSetId};
pub use kuramoto::{generate_kuramoto_dataset, simulate_kuramoto, KuramotoConfig, Observable};
pub use simulate::{
    companion_spectral_radius, normalize_minmax, simulate_series, stability_check, Diverged,
    SimParams, MAGNITUDE_GUARD,
};
pub use storage::{read_dataset, read_manifest, write_dataset, DatasetManifest};
pub use structure::{sample_structure, CoeffTensor};
