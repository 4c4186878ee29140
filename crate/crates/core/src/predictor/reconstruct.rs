use std::f64::consts::LN_10;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::HeadOutputs;
use crate::market::OhlcBar;
use crate::nn::logit;

/// Prices rebuilt from head outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedBar {
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

impl PredictedBar {
    pub fn to_bar(&self, date: NaiveDate) -> OhlcBar {
        OhlcBar::new(date, self.open, self.high, self.low, self.close)
    }

    pub fn prices(&self) -> [f64; 4] {
        [self.open, self.high, self.low, self.close]
    }
}

/// Rebuild a bar from `(y′_L, y_O, y_H, y_C)`:
///
/// ```text
/// L = 10^{logit(y′_L)} − 1
/// H = L / (1 − y_H)
/// O = L + y_O·(H − L)
/// C = L + y_C·(H − L)
/// ```
///
/// With `y′_L ∈ [0.5 + δ, 1 − δ]` and `y_H ∈ [δ, 1 − δ]` the result is
/// positive with `H > L`, and open/close are pinned inside `[L, H]`, so every
/// OHLC constraint holds for any input.
pub fn reconstruct_prices(h: &HeadOutputs, clamp: f64) -> PredictedBar {
    let y_low = h.range_low.clamp(0.5 + clamp, 1.0 - clamp);
    let y_high = h.rel_high.clamp(clamp, 1.0 - clamp);
    let y_open = h.rel_open.clamp(0.0, 1.0);
    let y_close = h.rel_close.clamp(0.0, 1.0);

    let low = (logit(y_low) * LN_10).exp_m1();
    let high = low / (1.0 - y_high);
    let span = high - low;
    let inside = |y: f64| (low + y * span).clamp(low, high);
    PredictedBar {
        open: inside(y_open),
        high,
        low,
        close: inside(y_close),
    }
}
