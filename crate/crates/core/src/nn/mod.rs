//! Minimal dense + LSTM engine with analytic gradients, Adam, and a
//! finite-difference oracle. Everything is `f64`.

mod activation;
mod dense;
mod gradcheck;
mod init;
mod loss;
mod lstm;
mod matrix;
mod optim;
mod params;

pub use activation::{logit, sigmoid, Activation};
pub use dense::{dense_forward, DenseLayer};
pub use gradcheck::{finite_difference_gradient, relative_error};
pub use init::{glorot_bound, glorot_init, glorot_uniform};
pub use loss::{mse_grad, mse_loss};
pub(crate) use lstm::step_unchecked as lstm_step_unchecked;
pub use lstm::{lstm_cell_step, lstm_sequence_backward, lstm_sequence_forward, LstmCellParams, LstmState, LstmStep};
pub use matrix::Matrix;
pub use optim::{optimizer_step, AdamConfig, Algorithm, OptimizerState};
pub use params::{GradientBundle, ParamSet};
