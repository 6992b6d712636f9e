use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ModelFlags;

pub const DEFAULT_LAMBDA_REG: f64 = 0.1;
pub const DEFAULT_LAMBDA_CR: f64 = 0.01;
pub const DEFAULT_CR_ALPHA: f64 = 1.5;
pub const DEFAULT_CR_BETA: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub lambda_reg: f64,
    pub lambda_cr: f64,
    pub cr_alpha: f64,
    pub cr_beta: f64,
    pub correlation_injection: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            learning_rate: 1e-3,
            weight_decay: 0.01,
            max_epochs: 100,
            patience: 10,
            lambda_reg: DEFAULT_LAMBDA_REG,
            lambda_cr: DEFAULT_LAMBDA_CR,
            cr_alpha: DEFAULT_CR_ALPHA,
            cr_beta: DEFAULT_CR_BETA,
            correlation_injection: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::config(msg));
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight_decay must be non-negative, got {}", self.weight_decay));
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive".into());
        }
        if self.patience == 0 {
            return bad("patience must be at least 1".into());
        }
        if !(self.lambda_reg >= 0.0 && self.lambda_cr >= 0.0) {
            return bad("loss weights must be non-negative".into());
        }
        if !(self.cr_alpha > 0.0 && self.cr_beta > 0.0) {
            return bad("cr_alpha and cr_beta must be positive".into());
        }
        Ok(())
    }

    /// Model flags this configuration trains: the count head exists iff its
    /// loss term is active.
    pub fn model_flags(&self) -> ModelFlags {
        ModelFlags {
            correlation_injection: self.correlation_injection,
            regression_head: self.lambda_reg > 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = TrainConfig::default();
        c.validate().unwrap();
        assert_eq!((c.cr_alpha, c.cr_beta), (1.5, 0.15));
        assert!(c.model_flags().regression_head);
    }

    #[test]
    fn rejects_bad_values() {
        for f in [
            |c: &mut TrainConfig| c.batch_size = 0,
            |c: &mut TrainConfig| c.learning_rate = 0.0,
            |c: &mut TrainConfig| c.patience = 0,
            |c: &mut TrainConfig| c.lambda_cr = -1.0,
            |c: &mut TrainConfig| c.cr_beta = 0.0,
            |c: &mut TrainConfig| c.weight_decay = f64::NAN,
        ] {
            let mut c = TrainConfig::default();
            f(&mut c);
            assert!(matches!(c.validate(), Err(Error::Config(_))));
        }
    }

    #[test]
    fn count_head_follows_lambda() {
        let c = TrainConfig {
            lambda_reg: 0.0,
            ..TrainConfig::default()
        };
        assert!(!c.model_flags().regression_head);
    }
}
