//! Graph-convolutional building blocks and recurrent spatiotemporal cells.
//!
//! Layers follow two API rules: every hyperparameter is set explicitly at
//! construction (no defaults) and remains readable afterwards via
//! [`RecurrentGcn::inspect_hyperparameters`] / [`ModelConfig`] accessors.

mod cells;
mod checkpoint;
mod layers;
mod model;

pub use cells::{DcrnnCell, GConvGruCell, GConvLstmCell};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use layers::{ChebConv, DiffusionConv, Linear};
pub use model::{CellState, LambdaMaxPolicy, ModelConfig, ModelKind, RecurrentGcn};

#[cfg(test)]
mod tests;
