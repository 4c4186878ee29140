//! Run configuration: one TOML document, then command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use candlecast::evaluation::SweepParameter;
use candlecast::indicators::IndicatorConfig;
use candlecast::market::SyntheticConfig;
use candlecast::predictor::ModelConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Where the price data comes from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// CSV files; each file's stem becomes its symbol.
    pub paths: Vec<PathBuf>,
    /// Generate this many synthetic symbols instead of reading files.
    pub synthetic_symbols: Option<usize>,
    pub synthetic: SyntheticConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            parameter: SweepParameter::Window,
            values: vec![5, 10, 20],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    /// Trailing days held out for testing.
    pub test_len: usize,
    /// Symbols listed in a recommendation.
    pub top_k: usize,
    pub jobs: usize,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub indicators: IndicatorConfig,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            output_dir: None,
            test_len: 350,
            top_k: 3,
            jobs: 1,
            data: DataConfig::default(),
            model: ModelConfig::default(),
            indicators: IndicatorConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Exactly one data source must be configured.
    pub fn check_data_source(&self) -> Result<(), CliError> {
        match (self.data.paths.is_empty(), self.data.synthetic_symbols) {
            (false, Some(_)) => Err(CliError::Usage(
                "configure either data files or synthetic symbols, not both".into(),
            )),
            (true, None) => Err(CliError::Usage(
                "no data source: pass CSV files or --synthetic N".into(),
            )),
            (true, Some(0)) => Err(CliError::Usage("synthetic symbol count must be positive".into())),
            _ => Ok(()),
        }
    }

    /// Seeded commands refuse to run without an explicit seed.
    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Usage("a seed is required (config `seed` or --seed)".into()))
    }
}
