//! Gradient optimizers and SGD-trained linear and logistic models.

mod linear;
mod objective;
mod optimizer;

pub use linear::{
    fit_linear, LinearFit, LinearModel, LinearSgdTrainer, Objective, LINEAR_MODEL_CLASS,
    LINEAR_TRAINER_CLASS,
};
pub use objective::{logistic_objective, squared_objective, LinearParameters};
pub use optimizer::{optimizer_step, OptimizerConfig, OptimizerState};
