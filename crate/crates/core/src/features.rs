//! Dual normalisation of OHLC bars into eight features, its inverse, and
//! sliding-window sample construction.
//!
//! Range features map each price through `σ(log₁₀(1 + x))`, a monotone map
//! into `(0.5, 1)` for positive prices that needs no window statistics.
//! Relative features locate open and close inside the day's range and
//! measure the range against the high:
//!
//! ```text
//! y_O = (O − L)/(H − L)   y_H = (H − L)/H   y_L = ε   y_C = (C − L)/(H − L)
//! ```

use std::f64::consts::LN_10;

use serde::{Deserialize, Serialize};

use crate::error::{argument, config, Error, Result};
use crate::market::{OhlcBar, OhlcSeries};
use crate::nn::{logit, sigmoid};

pub const DEFAULT_WINDOW: usize = 20;
pub const DEFAULT_EPSILON: f64 = 0.001;
pub const DEFAULT_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Look-back window W in trading days.
    pub window: usize,
    /// Constant used for the low relative feature.
    pub epsilon: f64,
    /// Clamp δ applied before inverting sigmoids.
    pub clamp: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            epsilon: DEFAULT_EPSILON,
            clamp: DEFAULT_CLAMP,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(config("window must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(config("epsilon must lie in (0, 1)"));
        }
        if !(self.clamp > 0.0 && self.clamp < 0.5) {
            return Err(config("clamp must lie in (0, 0.5)"));
        }
        Ok(())
    }
}

/// The eight per-day inputs: four range-normalised prices followed by four
/// relative features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub range_open: f64,
    pub range_high: f64,
    pub range_low: f64,
    pub range_close: f64,
    pub rel_open: f64,
    pub rel_high: f64,
    pub rel_low: f64,
    pub rel_close: f64,
}

impl FeatureVector {
    pub const LEN: usize = 8;
    pub const NAMES: [&'static str; 8] = [
        "range_open",
        "range_high",
        "range_low",
        "range_close",
        "rel_open",
        "rel_high",
        "rel_low",
        "rel_close",
    ];

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.range_open,
            self.range_high,
            self.range_low,
            self.range_close,
            self.rel_open,
            self.rel_high,
            self.rel_low,
            self.rel_close,
        ]
    }

    pub fn from_array(a: [f64; 8]) -> Self {
        Self {
            range_open: a[0],
            range_high: a[1],
            range_low: a[2],
            range_close: a[3],
            rel_open: a[4],
            rel_high: a[5],
            rel_low: a[6],
            rel_close: a[7],
        }
    }

    /// The next-day quantities a model predicts, read off this day.
    pub fn targets(&self) -> TargetTuple {
        TargetTuple {
            range_low: self.range_low,
            rel_open: self.rel_open,
            rel_high: self.rel_high,
            rel_close: self.rel_close,
        }
    }
}

/// `(y′_L, y_O, y_H, y_C)`: the low on the range scale plus the three
/// relative features, enough to rebuild a full bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetTuple {
    pub range_low: f64,
    pub rel_open: f64,
    pub rel_high: f64,
    pub rel_close: f64,
}

impl TargetTuple {
    pub const NAMES: [&'static str; 4] = ["range_low", "rel_open", "rel_high", "rel_close"];

    pub fn to_array(&self) -> [f64; 4] {
        [self.range_low, self.rel_open, self.rel_high, self.rel_close]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            range_low: a[0],
            rel_open: a[1],
            rel_high: a[2],
            rel_close: a[3],
        }
    }
}

/// `σ(log₁₀(1 + x))`.
pub fn norm_range(x: f64) -> Result<f64> {
    if !(x >= -1.0) || x.is_infinite() {
        return Err(Error::Domain(format!("range normalisation needs x ≥ -1, got {x}")));
    }
    Ok(sigmoid(x.ln_1p() / LN_10))
}

/// Inverse of [`norm_range`] after clamping `y` into `[δ, 1 − δ]` with the
/// default δ.
pub fn denorm_range(y: f64) -> Result<f64> {
    denorm_range_clamped(y, DEFAULT_CLAMP)
}

/// `10^{logit(y)} − 1` with `y` clamped into `[clamp, 1 − clamp]`.
pub fn denorm_range_clamped(y: f64, clamp: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::Domain(format!("range feature must lie in [0, 1], got {y}")));
    }
    let y = y.clamp(clamp, 1.0 - clamp);
    Ok((logit(y) * LN_10).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeFeatures {
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

/// Row-wise relative features. Degenerate bars (`high ≤ low`) map to
/// `(0.5, δ, ε, 0.5)`.
pub fn norm_relative(bar: &OhlcBar, epsilon: f64, clamp: f64) -> RelativeFeatures {
    let span = bar.high - bar.low;
    if !(span > 0.0) {
        return RelativeFeatures {
            open: 0.5,
            high: clamp,
            low: epsilon,
            close: 0.5,
        };
    }
    RelativeFeatures {
        open: (bar.open - bar.low) / span,
        high: span / bar.high,
        low: epsilon,
        close: (bar.close - bar.low) / span,
    }
}

pub fn bar_features(bar: &OhlcBar, cfg: &PipelineConfig) -> Result<FeatureVector> {
    let rel = norm_relative(bar, cfg.epsilon, cfg.clamp);
    Ok(FeatureVector {
        range_open: norm_range(bar.open)?,
        range_high: norm_range(bar.high)?,
        range_low: norm_range(bar.low)?,
        range_close: norm_range(bar.close)?,
        rel_open: rel.open,
        rel_high: rel.high,
        rel_low: rel.low,
        rel_close: rel.close,
    })
}

/// One feature vector per bar. Bars that break a constraint are rejected;
/// degenerate bars are accepted.
pub fn build_features(series: &OhlcSeries, cfg: &PipelineConfig) -> Result<Vec<FeatureVector>> {
    cfg.validate()?;
    series
        .bars()
        .iter()
        .map(|bar| {
            let broken = bar.violations();
            if !broken.is_empty() {
                return Err(Error::Data(format!(
                    "{} {}: bar violates {:?}",
                    series.symbol(),
                    bar.date,
                    broken
                )));
            }
            bar_features(bar, cfg)
        })
        .collect()
}

/// A window of consecutive feature vectors and the following day's targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedSample {
    pub window: Vec<FeatureVector>,
    pub target: TargetTuple,
    /// Row of the target day in the source series.
    pub target_index: usize,
}

/// All `len − W` samples; sample `k` covers rows `k..k+W` and targets row `k+W`.
pub fn make_windows(features: &[FeatureVector], window: usize) -> Result<Vec<WindowedSample>> {
    if window == 0 {
        return Err(argument("window must be at least 1"));
    }
    if features.len() <= window {
        return Err(argument(format!(
            "{} feature rows cannot fill a window of {window} plus a target",
            features.len()
        )));
    }
    Ok((0..features.len() - window)
        .map(|k| WindowedSample {
            window: features[k..k + window].to_vec(),
            target: features[k + window].targets(),
            target_index: k + window,
        })
        .collect())
}
