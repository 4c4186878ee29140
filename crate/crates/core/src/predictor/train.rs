use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ModelConfig, ModelParams};
use crate::error::{argument, Error, Result};
use crate::features::WindowedSample;
use crate::nn::{GradientBundle, OptimizerState};

const SHUFFLE_SALT: u64 = 0x5eed_ba7c_4e11_0001;

/// Fit `params` to `samples` with Adam for `cfg.training.epochs` epochs.
///
/// Returns one loss per epoch: the full-batch loss before the update, or the
/// sample-weighted mean of the mini-batch losses seen during the epoch.
pub fn train(
    params: &mut ModelParams,
    optimizer: &mut OptimizerState,
    samples: &[WindowedSample],
    cfg: &ModelConfig,
) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(argument(format!(
            "training needs at least {} days of data",
            cfg.window() + 1
        )));
    }
    if let Some(bad) = samples.iter().find(|s| s.window.len() != cfg.window()) {
        return Err(argument(format!(
            "sample window has {} days, model expects {}",
            bad.window.len(),
            cfg.window()
        )));
    }
    let n = samples.len();
    let batch = cfg.training.batch_size.unwrap_or(n).clamp(1, n);
    let train_encoder = !cfg.freeze_encoder;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ SHUFFLE_SALT);
    let mut history = Vec::with_capacity(cfg.training.epochs);

    for epoch in 0..cfg.training.epochs {
        if batch < n {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let refs: Vec<&WindowedSample> = chunk.iter().map(|&k| &samples[k]).collect();
            let (loss, grads) = params.loss_and_gradient(&refs, train_encoder);
            if !loss.is_finite() {
                return Err(Error::Data(format!("training loss became non-finite in epoch {epoch}")));
            }
            epoch_loss += loss * chunk.len() as f64;
            optimizer.step(params, &GradientBundle::from_params(&grads))?;
        }
        history.push(epoch_loss / n as f64);
    }
    Ok(history)
}
