//! Loss composition, AdamW, early-stopped training, grid search and the
//! two preliminary tasks (nonlinearity classification, coefficient
//! regression).

mod config;
mod fit;
mod grid;
mod loss;
mod optim;
mod prelim;

pub use config::{TrainConfig, DEFAULT_CR_ALPHA, DEFAULT_CR_BETA, DEFAULT_LAMBDA_CR, DEFAULT_LAMBDA_REG};
pub use fit::{
    evaluate_loss, fit, gradcheck_objective, score_samples, split_auroc, train, train_with_progress, write_jsonl,
    EpochRecord, Objective, TrainOutcome,
};
pub use grid::{
    grid_search, rerun_cell, CellReport, GridCell, GridReport, GridRun, GridSpace, RerunSummary,
    Technique,
};
pub use loss::{
    bce_loss, cr_penalty, cr_penalty_from, cr_weights, reg_loss, total_loss, BatchTargets,
    LossNodes, LossWeights,
};
pub use optim::{adamw_step, OptimState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use prelim::{
    coeff_metrics, predict_logits, train_coeff_regressor, train_nl_classifier,
    CoeffRegressionReport, NlClassifierReport,
};
