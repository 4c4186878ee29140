//! The price forecaster: configuration, network, training and the inverse
//! mapping from head outputs back to prices.

mod config;
mod model;
mod network;
mod reconstruct;
mod train;

pub use config::{ModelConfig, TrainConfig, Variant};
pub use model::{ForecastModel, MODEL_FORMAT_VERSION};
pub use network::{build_model, compute_gradients, Head, ModelParams};
pub use reconstruct::{reconstruct_prices, PredictedBar};
pub use train::train;

/// Head outputs `(y′_L, y_O, y_H, y_C)`; the same layout as the targets.
pub type HeadOutputs = crate::features::TargetTuple;
