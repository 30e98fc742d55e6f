//! Autoencoder harness for comparing reconstruction losses.

pub mod data;
pub mod demo;
pub mod eval;
pub mod model;
pub mod train;

pub use data::{generate_walk_dataset, generate_wave_dataset, holdout_split};
pub use demo::{run_demo, run_demo_on, DemoConfig, DemoDataset, DemoOutcome};
pub use eval::{cumulative_signs, directional_agreement, evaluate_rows, ExampleEvaluation};
pub use model::{AdamConfig, AutoencoderModel, ModelSpec};
pub use train::{train_autoencoder, TrainConfig, TrainLog, TrainRecord};
