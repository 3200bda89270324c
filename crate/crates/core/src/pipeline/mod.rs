//! Training, checkpointing, inference, evaluation and the ablation runner.

pub mod checkpoint;
pub mod config;
pub mod experiment;
pub mod optim;
pub mod predict;
pub mod train;

pub use checkpoint::Checkpoint;
pub use config::{DataSource, InputModality, OptimizerConfig, RunConfig};
pub use train::Trainer;
