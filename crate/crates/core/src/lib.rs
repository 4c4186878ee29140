//! Next-day OHLC forecasting with constraint-preserving normalisation, an
//! autoencoder-cascaded multi-task LSTM, and profit / Williams %R
//! recommenders evaluated by walk-forward backtest.

pub mod autoencoder;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod indicators;
pub mod market;
pub mod nn;
pub mod predictor;

pub use error::{Error, Result};
