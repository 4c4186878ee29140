use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_model, reconstruct_prices, train, HeadOutputs, ModelConfig, ModelParams, PredictedBar};
use crate::autoencoder::{pretrain, AutoencoderConfig};
use crate::error::{argument, config, Error, Result};
use crate::features::{build_features, make_windows, FeatureVector};
use crate::market::OhlcSeries;
use crate::nn::{OptimizerState, ParamSet};

pub const MODEL_FORMAT_VERSION: u32 = 1;

const AE_SEED_SALT: u64 = 0xae00_0000_0000_0000;

/// A trained forecaster with everything needed to resume or reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastModel {
    pub format_version: u32,
    /// The configuration actually used, including the derived encoder seed.
    pub config: ModelConfig,
    pub params: ModelParams,
    pub optimizer: OptimizerState,
    pub loss_history: Vec<f64>,
    pub pretrain_loss_history: Vec<f64>,
}

impl ForecastModel {
    /// Pretrain the encoder (if enabled), build the network and train it on
    /// every window of `series`.
    pub fn fit(series: &OhlcSeries, cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let features = build_features(series, &cfg.pipeline)?;
        Self::fit_features(&features, cfg)
    }

    /// As [`ForecastModel::fit`] on an already normalised feature sequence.
    pub fn fit_features(features: &[FeatureVector], cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let w = cfg.window();
        if features.len() <= w {
            return Err(argument(format!(
                "training needs at least {} days, got {}",
                w + 1,
                features.len()
            )));
        }
        let mut cfg = cfg.clone();
        let mut pretrain_loss_history = Vec::new();
        let encoder = if cfg.use_ae {
            cfg.autoencoder = AutoencoderConfig {
                seed: cfg.seed ^ AE_SEED_SALT,
                ..cfg.autoencoder.clone()
            };
            let outcome = pretrain(features, &cfg.autoencoder)?;
            pretrain_loss_history = outcome.loss_history;
            Some(outcome.params.encoder)
        } else {
            None
        };
        let mut model = Self::untrained(&cfg, encoder.as_ref())?;
        model.pretrain_loss_history = pretrain_loss_history;
        let samples = make_windows(features, w)?;
        model.loss_history = train(&mut model.params, &mut model.optimizer, &samples, &cfg)?;
        log::debug!(
            "trained {} for {} epochs, final loss {:?}",
            cfg.variant(),
            model.loss_history.len(),
            model.loss_history.last()
        );
        Ok(model)
    }

    /// A freshly initialised model; `encoder` is required when the config
    /// uses the autoencoder.
    pub fn untrained(cfg: &ModelConfig, encoder: Option<&crate::nn::DenseLayer>) -> Result<Self> {
        cfg.validate()?;
        let params = build_model(cfg, encoder)?;
        let optimizer = OptimizerState::adam(&params, cfg.training.adam);
        Ok(Self {
            format_version: MODEL_FORMAT_VERSION,
            config: cfg.clone(),
            params,
            optimizer,
            loss_history: Vec::new(),
            pretrain_loss_history: Vec::new(),
        })
    }

    pub fn window(&self) -> usize {
        self.config.window()
    }

    pub fn param_count(&self) -> usize {
        self.params.param_count()
    }

    /// Head outputs for the day after `window`, which must hold exactly `W`
    /// feature vectors.
    pub fn predict_next(&self, window: &[FeatureVector]) -> Result<HeadOutputs> {
        if window.len() != self.window() {
            return Err(argument(format!(
                "prediction window has {} days, model expects {}",
                window.len(),
                self.window()
            )));
        }
        self.params.forward(window)
    }

    pub fn predict_bar(&self, window: &[FeatureVector]) -> Result<PredictedBar> {
        let h = self.predict_next(window)?;
        Ok(reconstruct_prices(&h, self.config.pipeline.clamp))
    }

    /// Predicted bar for day `day` of `features`, from the `W` days before it.
    pub fn predict_day(&self, features: &[FeatureVector], day: usize) -> Result<PredictedBar> {
        let w = self.window();
        if day < w || day > features.len() {
            return Err(argument(format!(
                "day {day} has no full {w}-day window in a sequence of {}",
                features.len()
            )));
        }
        self.predict_bar(&features[day - w..day])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(config(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                model.format_version
            )));
        }
        let expected = build_model(&model.config, model.params.encoder.as_ref())?;
        if expected
            .tensors()
            .iter()
            .map(|t| t.len())
            .ne(model.params.tensors().iter().map(|t| t.len()))
        {
            return Err(Error::Data(
                "model parameters do not match the stored configuration".into(),
            ));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
