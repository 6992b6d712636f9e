use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semgen::functions::FunctionSetId;

/// Coefficient magnitudes of the "base" range used for training data.
pub const BASE_RANGE: (f64, f64) = (0.3, 0.5);
/// Shifted, non-overlapping range used for validation and the second test set.
pub const SHIFTED_RANGE: (f64, f64) = (0.2, 0.3);
pub const TRAIN_NOISE_VARIANCE: f64 = 0.4;
pub const SHIFTED_NOISE_VARIANCE: f64 = 0.6;

pub const DEFAULT_SERIES_LEN: usize = 300;
pub const DEFAULT_BURN_IN: usize = 50;
pub const DEFAULT_NL_PROBABILITY: f64 = 0.4;
pub const DEFAULT_MAX_ATTEMPTS: usize = 10_000;

/// Everything needed to regenerate a synthetic dataset bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub name: String,
    pub num_vars: usize,
    pub max_lag: usize,
    pub series_len: usize,
    pub burn_in: usize,
    pub link_probability: f64,
    pub coeff_range: (f64, f64),
    pub signed_coeffs: bool,
    pub noise_variance: f64,
    pub function_set: FunctionSetId,
    pub nl_probability: f64,
    /// Fraction of samples that are allowed non-identity functions at all.
    /// The remaining samples are purely linear.
    pub nonlinear_sample_fraction: f64,
    /// When set, one edge pattern is drawn per dataset and only the
    /// coefficient values (and functions) vary between samples.
    pub fixed_pattern: bool,
    /// Coefficient range for the validation split and the second test split.
    pub shifted_coeff_range: (f64, f64),
    /// Noise variance for the second test split.
    pub shifted_noise_variance: f64,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub master_seed: u64,
    /// Rejection budget per accepted sample.
    pub max_attempts: usize,
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        let (low, high) = self.coeff_range;
        let (slow, shigh) = self.shifted_coeff_range;
        if self.num_vars == 0 || self.max_lag == 0 {
            return Err(Error::config("num_vars and max_lag must be positive"));
        }
        if self.series_len <= self.max_lag + self.burn_in {
            return Err(Error::config(format!(
                "series_len ({}) must exceed max_lag + burn_in ({})",
                self.series_len,
                self.max_lag + self.burn_in
            )));
        }
        if !(0.0..=1.0).contains(&self.link_probability) {
            return Err(Error::config("link_probability must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.nl_probability)
            || !(0.0..=1.0).contains(&self.nonlinear_sample_fraction)
        {
            return Err(Error::config("nonlinear probabilities must lie in [0, 1]"));
        }
        if !(low > 0.0 && low <= high) || !(slow > 0.0 && slow <= shigh) {
            return Err(Error::config("coefficient ranges need 0 < low <= high"));
        }
        if !(self.noise_variance > 0.0 && self.shifted_noise_variance > 0.0) {
            return Err(Error::config("noise variance must be positive"));
        }
        if self.max_attempts == 0 {
            return Err(Error::config("max_attempts must be positive"));
        }
        Ok(())
    }

    /// Number of potential edges, V·V·N.
    pub fn num_entries(&self) -> usize {
        self.num_vars * self.num_vars * self.max_lag
    }

    pub fn expected_edges(&self) -> f64 {
        self.link_probability * self.num_entries() as f64
    }

    /// Generation parameters for one split.
    pub fn split_params(&self, split: SplitKind) -> SplitParams {
        let (coeff_range, noise_variance) = match split {
            SplitKind::Train | SplitKind::Test1 => (self.coeff_range, self.noise_variance),
            SplitKind::Val => (self.shifted_coeff_range, self.noise_variance),
            SplitKind::Test2 => (self.shifted_coeff_range, self.shifted_noise_variance),
        };
        SplitParams {
            coeff_range,
            noise_variance,
        }
    }

    pub fn split_size(&self, split: SplitKind) -> usize {
        match split {
            SplitKind::Train => self.n_train,
            SplitKind::Val => self.n_val,
            SplitKind::Test1 | SplitKind::Test2 => self.n_test,
        }
    }

    /// Overrides all split sizes, keeping everything else.
    pub fn with_sizes(mut self, n_train: usize, n_val: usize, n_test: usize) -> Self {
        self.n_train = n_train;
        self.n_val = n_val;
        self.n_test = n_test;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitParams {
    pub coeff_range: (f64, f64),
    pub noise_variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Train,
    Val,
    Test1,
    Test2,
}

impl SplitKind {
    pub const ALL: [SplitKind; 4] = [
        SplitKind::Train,
        SplitKind::Val,
        SplitKind::Test1,
        SplitKind::Test2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitKind::Train => "train",
            SplitKind::Val => "val",
            SplitKind::Test1 => "test1",
            SplitKind::Test2 => "test2",
        }
    }

    pub(crate) fn tag(self) -> u64 {
        match self {
            SplitKind::Train => 1,
            SplitKind::Val => 2,
            SplitKind::Test1 => 3,
            SplitKind::Test2 => 4,
        }
    }
}

impl std::str::FromStr for SplitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(SplitKind::Train),
            "val" | "validation" => Ok(SplitKind::Val),
            "test1" | "test" => Ok(SplitKind::Test1),
            "test2" => Ok(SplitKind::Test2),
            other => Err(Error::config(format!("unknown split '{other}'"))),
        }
    }
}

impl std::fmt::Display for SplitKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Names of the tabulated dataset presets.
pub const PRESET_NAMES: [&str; 10] = [
    "SL", "ML", "SNL", "MNL", "LNL", "XLNL", "Wide7", "Wide10", "Wide15", "Pre",
];

/// Returns a tabulated preset. Lookup is case-insensitive.
///
/// | preset | V | N | functions | coefficients | expected edges |
/// |--------|---|---|-----------|--------------|----------------|
/// | SL     | 3 | 2 | L         | br           | 2.7            |
/// | ML     | 5 | 3 | L         | ±br          | 7.5            |
/// | SNL    | 3 | 2 | NL1       | br           | 2.7            |
/// | MNL    | 5 | 3 | NL1       | ±br          | 7.5            |
/// | LNL    | 3 | 2 | NL2       | br           | 2.7            |
/// | XLNL   | 5 | 3 | NL2       | ±br          | 7.5            |
/// | WideV  | V | 3 | NL2       | ±br          | 0.1·V·V·3      |
/// | Pre    | 3 | 2 | L / NL1   | br           | 9 (fixed)      |
///
/// br = (0.3, 0.5), sr = (0.2, 0.3). Training and test-1 noise variance is
/// 0.4; test-2 uses sr coefficients with variance 0.6; validation uses sr
/// coefficients with the training noise.
pub fn builtin_config(name: &str) -> Result<DatasetConfig> {
    let canonical = PRESET_NAMES
        .iter()
        .find(|p| p.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::config(format!("unknown preset '{name}'")))?;

    let base = |v: usize, n: usize, edges: f64, set: FunctionSetId, signed: bool| DatasetConfig {
        name: canonical.to_string(),
        num_vars: v,
        max_lag: n,
        series_len: DEFAULT_SERIES_LEN,
        burn_in: DEFAULT_BURN_IN,
        link_probability: edges / (v * v * n) as f64,
        coeff_range: BASE_RANGE,
        signed_coeffs: signed,
        noise_variance: TRAIN_NOISE_VARIANCE,
        function_set: set,
        nl_probability: DEFAULT_NL_PROBABILITY,
        nonlinear_sample_fraction: 1.0,
        fixed_pattern: false,
        shifted_coeff_range: SHIFTED_RANGE,
        shifted_noise_variance: SHIFTED_NOISE_VARIANCE,
        n_train: 5000,
        n_val: 500,
        n_test: 500,
        master_seed: 0,
        max_attempts: DEFAULT_MAX_ATTEMPTS,
    };

    use FunctionSetId::*;
    let config = match *canonical {
        "SL" => base(3, 2, 2.7, L, false),
        "ML" => base(5, 3, 7.5, L, true),
        "SNL" => base(3, 2, 2.7, NL1, false),
        "MNL" => base(5, 3, 7.5, NL1, true),
        "LNL" => base(3, 2, 2.7, NL2, false),
        "XLNL" => base(5, 3, 7.5, NL2, true),
        "Wide7" => base(7, 3, 14.7, NL2, true),
        "Wide10" => base(10, 3, 30.0, NL2, true),
        "Wide15" => base(15, 3, 67.5, NL2, true),
        "Pre" => DatasetConfig {
            nonlinear_sample_fraction: 0.5,
            fixed_pattern: true,
            ..base(3, 2, 9.0, NL1, false)
        },
        _ => unreachable!("preset list and match arms agree"),
    };
    Ok(config)
}
