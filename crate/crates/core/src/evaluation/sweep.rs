use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::compute_metrics_prices;
use super::parallel::fit_models;
use crate::error::{argument, Error, Result};
use crate::features::build_features;
use crate::market::{split_series, OhlcSeries};
use crate::predictor::ModelConfig;

/// Share of the training days held out for validation.
pub const VALIDATION_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Window,
    SharedLayers,
    TaskLayers,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            Self::Window => "window",
            Self::SharedLayers => "shared_layers",
            Self::TaskLayers => "task_layers",
        }
    }

    pub fn apply(self, cfg: &mut ModelConfig, value: usize) {
        match self {
            Self::Window => cfg.pipeline.window = value,
            Self::SharedLayers => cfg.shared_layers = value,
            Self::TaskLayers => cfg.task_layers = value,
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Self::Window, Self::SharedLayers, Self::TaskLayers]
            .into_iter()
            .find(|p| p.name() == s.trim().to_ascii_lowercase().replace('-', "_"))
            .ok_or_else(|| argument(format!("unknown sweep parameter `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: usize,
    pub rmse: f64,
    pub mae: f64,
    pub mape: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["value", "rmse", "mae", "mape"])?;
        for r in &self.rows {
            w.write_record([
                r.value.to_string(),
                r.rmse.to_string(),
                r.mae.to_string(),
                r.mape.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Days held out from a training series of `len` days.
pub fn validation_len(len: usize) -> usize {
    ((len as f64 * VALIDATION_FRACTION).round() as usize).max(1)
}

/// For each value: train on all but the last 10% of every training series,
/// forecast the held-out days, and pool the errors over all stocks.
pub fn sweep(
    parameter: SweepParameter,
    values: &[usize],
    training: &[OhlcSeries],
    base: &ModelConfig,
    jobs: usize,
) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(argument("sweep needs at least one value"));
    }
    if training.is_empty() {
        return Err(argument("sweep needs at least one series"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    let mut rows = Vec::with_capacity(sorted.len());
    for value in sorted {
        let mut cfg = base.clone();
        parameter.apply(&mut cfg, value);
        cfg.validate()?;
        let fits: Vec<OhlcSeries> = training
            .iter()
            .map(|s| split_series(s, validation_len(s.len())).map(|(fit, _)| fit))
            .collect::<Result<_>>()?;
        let models = fit_models(&fits, &cfg, jobs)?;

        let mut actual = Vec::new();
        let mut predicted = Vec::new();
        for ((s, fit), model) in training.iter().zip(&fits).zip(&models) {
            let features = build_features(s, &cfg.pipeline)?;
            for day in fit.len()..s.len() {
                predicted.push(model.predict_day(&features, day)?.prices());
                actual.push(s.bars()[day].prices());
            }
        }
        let m = compute_metrics_prices(&actual, &predicted)?;
        log::info!("{parameter}={value}: rmse {} mae {} mape {}", m.rmse, m.mae, m.mape);
        rows.push(SweepRow {
            value,
            rmse: m.rmse,
            mae: m.mae,
            mape: m.mape,
        });
    }
    Ok(SweepTable { parameter, rows })
}
