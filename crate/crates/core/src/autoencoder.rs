//! 8 → 4 → 8 sigmoid autoencoder pretrained on per-day feature vectors.
//! Only the encoder survives pretraining; it becomes the front of the
//! forecasting network.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};
use crate::features::FeatureVector;
use crate::nn::{Activation, AdamConfig, DenseLayer, GradientBundle, OptimizerState, ParamSet};

pub const MIN_PRETRAIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AutoencoderConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Stop once the loss improved by less than `min_improvement` over the
    /// last `patience` epochs.
    pub patience: usize,
    pub min_improvement: f64,
    pub seed: u64,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        Self {
            hidden: 4,
            epochs: 500,
            learning_rate: 1e-2,
            patience: 25,
            min_improvement: 1e-7,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderParams {
    pub encoder: DenseLayer,
    pub decoder: DenseLayer,
}

impl ParamSet for AutoencoderParams {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut t = self.encoder.tensors();
        t.extend(self.decoder.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = self.encoder.tensors_mut();
        t.extend(self.decoder.tensors_mut());
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainOutcome {
    pub params: AutoencoderParams,
    /// Full-batch reconstruction MSE before each update.
    pub loss_history: Vec<f64>,
}

impl AutoencoderParams {
    pub fn init(hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder = DenseLayer::glorot(FeatureVector::LEN, hidden, Activation::Sigmoid, &mut rng);
        let decoder = DenseLayer::glorot(hidden, FeatureVector::LEN, Activation::Sigmoid, &mut rng);
        Self { encoder, decoder }
    }

    pub fn reconstruct(&self, x: &[f64; 8]) -> Vec<f64> {
        let code = self.encoder.forward_unchecked(x);
        self.decoder.forward_unchecked(&code)
    }

    /// Mean over samples of the per-sample reconstruction MSE.
    pub fn loss(&self, data: &[[f64; 8]]) -> f64 {
        data.iter()
            .map(|x| {
                let y = self.reconstruct(x);
                y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / 8.0
            })
            .sum::<f64>()
            / data.len() as f64
    }

    /// Loss and its exact gradient over the whole batch.
    pub fn loss_and_gradient(&self, data: &[[f64; 8]]) -> (f64, GradientBundle) {
        let mut grad = self.clone();
        grad.fill_zero();
        let n = data.len() as f64;
        let mut loss = 0.0;
        for x in data {
            let code = self.encoder.forward_unchecked(x);
            let y = self.decoder.forward_unchecked(&code);
            let dy: Vec<f64> = y.iter().zip(x).map(|(a, b)| 2.0 * (a - b) / (8.0 * n)).collect();
            loss += y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (8.0 * n);
            let dcode = self.decoder.backward(&code, &y, &dy, &mut grad.decoder);
            self.encoder.backward(x, &code, &dcode, &mut grad.encoder);
        }
        (loss, GradientBundle::from_params(&grad))
    }
}

/// Train the autoencoder with full-batch Adam to reconstruct its inputs.
pub fn pretrain(features: &[FeatureVector], cfg: &AutoencoderConfig) -> Result<PretrainOutcome> {
    if features.len() < MIN_PRETRAIN_SAMPLES {
        return Err(argument(format!(
            "autoencoder pretraining needs at least {MIN_PRETRAIN_SAMPLES} days, got {}",
            features.len()
        )));
    }
    if cfg.hidden == 0 {
        return Err(argument("autoencoder needs at least one hidden unit"));
    }
    let data: Vec<[f64; 8]> = features.iter().map(FeatureVector::to_array).collect();
    let mut params = AutoencoderParams::init(cfg.hidden, cfg.seed);
    let mut opt = OptimizerState::adam(
        &params,
        AdamConfig {
            learning_rate: cfg.learning_rate,
            ..AdamConfig::default()
        },
    );
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let (loss, grad) = params.loss_and_gradient(&data);
        history.push(loss);
        opt.step(&mut params, &grad)?;
        let e = history.len();
        if cfg.patience > 0 && e > cfg.patience && history[e - 1 - cfg.patience] - loss < cfg.min_improvement {
            break;
        }
    }
    Ok(PretrainOutcome {
        params,
        loss_history: history,
    })
}

/// Encoder-only forward pass.
pub fn encode(params: &AutoencoderParams, features: &FeatureVector) -> [f64; 4] {
    encode_with(&params.encoder, features)
}

pub fn encode_with(encoder: &DenseLayer, features: &FeatureVector) -> [f64; 4] {
    let out = encoder.forward_unchecked(&features.to_array());
    let mut code = [0.0; 4];
    for (c, v) in code.iter_mut().zip(out) {
        *c = v;
    }
    code
}
