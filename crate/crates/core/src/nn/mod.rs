//! Dense tensors with reverse-mode differentiation and the trainable
//! architectures built on them.

pub mod checkpoint;
pub mod gradcheck;
pub mod graph;
pub mod matrix;
pub mod model;
pub mod predict;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointManifest};
pub use gradcheck::{gradcheck, gradcheck_loss, gradcheck_report, GradcheckReport};
pub use graph::{Graph, Var};
pub use matrix::Matrix;
pub use model::{
    gru_forward, init_params, mlp_forward, Architecture, ForwardNodes, ForwardOutput, ModelDims,
    ModelFlags, ModelParams, ParamTensor, ParamVars, SizePreset,
};
pub use predict::{predict_distribution, predict_windowed, window_starts, EdgeDistribution};
