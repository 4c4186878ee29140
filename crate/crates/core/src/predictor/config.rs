use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autoencoder::AutoencoderConfig;
use crate::error::{config, Error, Result};
use crate::features::PipelineConfig;
use crate::nn::AdamConfig;

/// The four feature-compatible model variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Pretrained encoder + multi-task LSTM (the proposed model).
    #[serde(rename = "PF-AE-PMTL")]
    PfAePmtl,
    /// Multi-task LSTM without the encoder.
    #[serde(rename = "PF-PMTL")]
    PfPmtl,
    /// Single-task LSTM.
    #[serde(rename = "PF-LSTM")]
    PfLstm,
    /// Pretrained encoder + single-task LSTM.
    #[serde(rename = "PF-AE-LSTM")]
    PfAeLstm,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::PfAePmtl, Variant::PfPmtl, Variant::PfLstm, Variant::PfAeLstm];

    pub fn name(self) -> &'static str {
        match self {
            Variant::PfAePmtl => "PF-AE-PMTL",
            Variant::PfPmtl => "PF-PMTL",
            Variant::PfLstm => "PF-LSTM",
            Variant::PfAeLstm => "PF-AE-LSTM",
        }
    }

    pub fn use_ae(self) -> bool {
        matches!(self, Variant::PfAePmtl | Variant::PfAeLstm)
    }

    pub fn multi_task(self) -> bool {
        matches!(self, Variant::PfAePmtl | Variant::PfPmtl)
    }

    pub fn from_flags(use_ae: bool, multi_task: bool) -> Self {
        match (use_ae, multi_task) {
            (true, true) => Variant::PfAePmtl,
            (false, true) => Variant::PfPmtl,
            (false, false) => Variant::PfLstm,
            (true, false) => Variant::PfAeLstm,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Argument(format!("unknown variant `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// `None` trains full-batch.
    pub batch_size: Option<usize>,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: None,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub use_ae: bool,
    pub multi_task: bool,
    pub shared_layers: usize,
    pub task_layers: usize,
    pub shared_hidden: usize,
    pub head_hidden: usize,
    /// Keep the pretrained encoder fixed instead of fine-tuning it.
    pub freeze_encoder: bool,
    pub forget_bias: f64,
    pub seed: u64,
    pub pipeline: PipelineConfig,
    pub training: TrainConfig,
    pub autoencoder: AutoencoderConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            use_ae: true,
            multi_task: true,
            shared_layers: 2,
            task_layers: 1,
            shared_hidden: 32,
            head_hidden: 16,
            freeze_encoder: false,
            forget_bias: 1.0,
            seed: 0,
            pipeline: PipelineConfig::default(),
            training: TrainConfig::default(),
            autoencoder: AutoencoderConfig::default(),
        }
    }
}

impl ModelConfig {
    pub fn for_variant(variant: Variant) -> Self {
        Self::default().with_variant(variant)
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.use_ae = variant.use_ae();
        self.multi_task = variant.multi_task();
        self
    }

    pub fn variant(&self) -> Variant {
        Variant::from_flags(self.use_ae, self.multi_task)
    }

    pub fn window(&self) -> usize {
        self.pipeline.window
    }

    pub fn head_count(&self) -> usize {
        if self.multi_task {
            4
        } else {
            1
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pipeline.validate()?;
        if self.shared_layers > 0 && self.shared_hidden == 0 {
            return Err(config("shared hidden size must be positive"));
        }
        if self.task_layers > 0 && self.head_hidden == 0 {
            return Err(config("head hidden size must be positive"));
        }
        if self.use_ae && self.autoencoder.hidden == 0 {
            return Err(config("encoder width must be positive"));
        }
        if self.training.batch_size == Some(0) {
            return Err(config("batch size must be positive"));
        }
        if !(self.training.adam.learning_rate > 0.0) {
            return Err(config("learning rate must be positive"));
        }
        Ok(())
    }
}
