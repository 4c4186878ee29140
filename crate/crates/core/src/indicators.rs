//! Trading signals on top of next-day predictions: buy-at-low/sell-at-high
//! profit and Williams %R computed over a window that ends in the predicted
//! bar.
//!
//! %R is kept as a magnitude in `[0, 100]`; a reading at or above the
//! threshold θ is what the toolkit calls a buy signal.

use std::cmp::Ordering;
use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{argument, config, Result};
use crate::market::OhlcBar;
use crate::predictor::PredictedBar;

pub const DEFAULT_LOOKBACK: usize = 14;
pub const DEFAULT_THRESHOLD: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndicatorConfig {
    /// Days in the %R window, the predicted day included.
    pub lookback: usize,
    /// Buy threshold on the %R magnitude.
    pub threshold: f64,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        Self {
            lookback: DEFAULT_LOOKBACK,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl IndicatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lookback < 2 {
            return Err(config(format!(
                "%R look-back must be at least 2, got {}",
                self.lookback
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 100.0) {
            return Err(config(format!(
                "%R threshold must lie in (0, 100), got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Profit of buying at yesterday's actual low and selling at today's
/// predicted high.
pub fn predicted_profit(predicted_high: f64, previous_low: f64) -> f64 {
    predicted_high - previous_low
}

/// Profit of buying at yesterday's actual low and selling at today's actual
/// high.
pub fn actual_profit(actual_high: f64, previous_low: f64) -> f64 {
    actual_high - previous_low
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilliamsR {
    /// Magnitude in `[0, 100]`.
    pub value: f64,
    /// Highest high equals lowest low; `value` is 0 by convention.
    pub degenerate: bool,
}

/// `100·(H_max − C_pred)/(H_max − L_min)` where the extremes run over the
/// `d − 1` actual bars in `history` plus the predicted bar.
pub fn williams_r(history: &[OhlcBar], predicted: &PredictedBar, cfg: &IndicatorConfig) -> Result<WilliamsR> {
    cfg.validate()?;
    if history.len() != cfg.lookback - 1 {
        return Err(argument(format!(
            "%R needs exactly {} past bars, got {}",
            cfg.lookback - 1,
            history.len()
        )));
    }
    let highs = history.iter().map(|b| b.high).chain([predicted.high]);
    let lows = history.iter().map(|b| b.low).chain([predicted.low]);
    Ok(williams_r_from_extremes(
        highs.fold(f64::NEG_INFINITY, f64::max),
        lows.fold(f64::INFINITY, f64::min),
        predicted.close,
    ))
}

/// %R from precomputed extremes; the close is clamped into the range so the
/// result stays in `[0, 100]`.
pub fn williams_r_from_extremes(max_high: f64, min_low: f64, close: f64) -> WilliamsR {
    let span = max_high - min_low;
    if !(span > 0.0) {
        return WilliamsR {
            value: 0.0,
            degenerate: true,
        };
    }
    let value = (100.0 * (max_high - close) / span).clamp(0.0, 100.0);
    WilliamsR {
        value,
        degenerate: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedProfit {
    pub symbol: String,
    pub predicted_profit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuySignal {
    pub symbol: String,
    pub williams_r: f64,
}

/// Descending by value, then ascending by symbol; NaN sorts last.
fn rank_desc(a: (&str, f64), b: (&str, f64)) -> Ordering {
    match (a.1.is_nan(), b.1.is_nan()) {
        (false, true) => Ordering::Less,
        (true, false) => Ordering::Greater,
        _ => {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.0.cmp(b.0))
        }
    }
}

/// The `k` most profitable symbols, best first; equal profits are ordered by
/// symbol name.
pub fn recommend_top_profit(profits: &[(String, f64)], k: usize) -> Vec<RankedProfit> {
    let mut ranked: Vec<&(String, f64)> = profits.iter().collect();
    ranked.sort_by(|a, b| rank_desc((&a.0, a.1), (&b.0, b.1)));
    ranked
        .into_iter()
        .take(k)
        .map(|(symbol, p)| RankedProfit {
            symbol: symbol.clone(),
            predicted_profit: *p,
        })
        .collect()
}

/// Every symbol whose %R reaches `threshold`, strongest first.
pub fn recommend_buy_signals(readings: &[(String, f64)], threshold: f64) -> Vec<BuySignal> {
    let mut hits: Vec<&(String, f64)> = readings.iter().filter(|(_, r)| *r >= threshold).collect();
    hits.sort_by(|a, b| rank_desc((&a.0, a.1), (&b.0, b.1)));
    hits.into_iter()
        .map(|(symbol, r)| BuySignal {
            symbol: symbol.clone(),
            williams_r: *r,
        })
        .collect()
}

/// Per-symbol inputs for one recommendation day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolSignal {
    pub symbol: String,
    pub predicted: PredictedBar,
    pub predicted_profit: f64,
    pub williams_r: f64,
    pub williams_r_degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub date: NaiveDate,
    pub top_profit: Vec<RankedProfit>,
    pub buy_signals: Vec<BuySignal>,
    pub signals: Vec<SymbolSignal>,
}

impl Recommendation {
    /// Rank `signals` into a recommendation for `date`.
    pub fn from_signals(date: NaiveDate, signals: Vec<SymbolSignal>, k: usize, cfg: &IndicatorConfig) -> Self {
        let profits: Vec<(String, f64)> = signals.iter().map(|s| (s.symbol.clone(), s.predicted_profit)).collect();
        let readings: Vec<(String, f64)> = signals.iter().map(|s| (s.symbol.clone(), s.williams_r)).collect();
        Self {
            date,
            top_profit: recommend_top_profit(&profits, k),
            buy_signals: recommend_buy_signals(&readings, cfg.threshold),
            signals,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per symbol: `date,symbol,predicted_profit,williams_r,top_pick,buy_signal`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let top = self.top_profit.first().map(|r| r.symbol.as_str());
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "date",
            "symbol",
            "predicted_profit",
            "williams_r",
            "top_pick",
            "buy_signal",
        ])?;
        for s in &self.signals {
            let buy = self.buy_signals.iter().any(|b| b.symbol == s.symbol);
            w.write_record([
                self.date.to_string(),
                s.symbol.clone(),
                s.predicted_profit.to_string(),
                s.williams_r.to_string(),
                (top == Some(s.symbol.as_str())).to_string(),
                buy.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn day(n: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 1, n).unwrap()
    }

    fn flat(high: f64, low: f64) -> OhlcBar {
        OhlcBar::new(day(1), low, high, low, low)
    }

    fn pbar(high: f64, low: f64, close: f64) -> PredictedBar {
        PredictedBar {
            open: low,
            high,
            low,
            close,
        }
    }

    fn named(v: &[(&str, f64)]) -> Vec<(String, f64)> {
        v.iter().map(|(s, x)| (s.to_string(), *x)).collect()
    }

    #[test]
    fn profits() {
        assert_eq!(predicted_profit(105.0, 100.0), 5.0);
        assert_eq!(predicted_profit(100.0, 100.0), 0.0);
        assert_eq!(predicted_profit(95.0, 100.0), -5.0);
        assert_eq!(actual_profit(110.0, 90.0), 20.0);
        assert_eq!(actual_profit(90.0, 90.0), 0.0);
    }

    #[test]
    fn williams_r_reference_values() {
        let cfg = IndicatorConfig {
            lookback: 3,
            ..Default::default()
        };
        let hist = [flat(110.0, 95.0), flat(100.0, 90.0)];
        let r = williams_r(&hist, &pbar(105.0, 93.0, 92.0), &cfg).unwrap();
        assert!((r.value - 90.0).abs() < 1e-12);
        assert!(!r.degenerate);
        assert_eq!(williams_r(&hist, &pbar(105.0, 93.0, 110.0), &cfg).unwrap().value, 0.0);
        assert_eq!(williams_r(&hist, &pbar(105.0, 93.0, 90.0), &cfg).unwrap().value, 100.0);
    }

    #[test]
    fn williams_r_window_length_is_checked() {
        let cfg = IndicatorConfig::default();
        let hist = vec![flat(110.0, 90.0); 12];
        assert!(williams_r(&hist, &pbar(100.0, 95.0, 97.0), &cfg).is_err());
        let hist = vec![flat(110.0, 90.0); 13];
        assert!(williams_r(&hist, &pbar(100.0, 95.0, 97.0), &cfg).is_ok());
    }

    #[test]
    fn degenerate_window() {
        let r = williams_r_from_extremes(100.0, 100.0, 100.0);
        assert!(r.degenerate);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn config_bounds() {
        assert!(IndicatorConfig::default().validate().is_ok());
        for (lookback, threshold) in [(1, 80.0), (14, 0.0), (14, 100.0), (14, f64::NAN)] {
            assert!(IndicatorConfig { lookback, threshold }.validate().is_err());
        }
    }

    #[test]
    fn top_profit_ranking() {
        let p = named(&[("A", 2.0), ("B", -1.0), ("C", 5.0)]);
        let top: Vec<String> = recommend_top_profit(&p, 1).into_iter().map(|r| r.symbol).collect();
        assert_eq!(top, ["C"]);
        let all: Vec<String> = recommend_top_profit(&p, 10).into_iter().map(|r| r.symbol).collect();
        assert_eq!(all, ["C", "A", "B"]);
        let tie = named(&[("B", 3.0), ("A", 3.0)]);
        assert_eq!(recommend_top_profit(&tie, 1)[0].symbol, "A");
        let with_nan = named(&[("A", f64::NAN), ("B", -3.0)]);
        assert_eq!(recommend_top_profit(&with_nan, 1)[0].symbol, "B");
    }

    #[test]
    fn buy_signals() {
        let r = named(&[("A", 90.0), ("B", 60.0), ("C", 81.0)]);
        let s: Vec<String> = recommend_buy_signals(&r, 80.0).into_iter().map(|b| b.symbol).collect();
        assert_eq!(s, ["A", "C"]);
        assert!(recommend_buy_signals(&[], 80.0).is_empty());
        assert_eq!(recommend_buy_signals(&named(&[("RELIANCE", 98.39)]), 80.0).len(), 1);
        assert!(recommend_buy_signals(&named(&[("A", 99.9)]), 100.0).is_empty());
    }

    #[test]
    fn recommendation_round_trips() {
        let cfg = IndicatorConfig::default();
        let signals = vec![
            SymbolSignal {
                symbol: "A".into(),
                predicted: pbar(101.0, 99.0, 99.5),
                predicted_profit: 1.5,
                williams_r: 85.0,
                williams_r_degenerate: false,
            },
            SymbolSignal {
                symbol: "B".into(),
                predicted: pbar(51.0, 49.0, 50.5),
                predicted_profit: 0.5,
                williams_r: 20.0,
                williams_r_degenerate: false,
            },
        ];
        let rec = Recommendation::from_signals(day(2), signals, 1, &cfg);
        assert_eq!(rec.top_profit[0].symbol, "A");
        assert_eq!(rec.buy_signals.len(), 1);
        assert_eq!(Recommendation::from_json(&rec.to_json().unwrap()).unwrap(), rec);
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("2020-01-02,A,1.5,85,true,true"));
    }

    proptest! {
        #[test]
        fn williams_r_bounded_and_scale_free(
            bars in prop::collection::vec((1.0f64..1000.0, 0.0f64..1.0), 13),
            pred in (1.0f64..1000.0, 0.0f64..1.0, 0.0f64..=1.0),
            scale in 1e-3f64..1e3,
        ) {
            let cfg = IndicatorConfig::default();
            let make = |c: f64| -> (Vec<OhlcBar>, PredictedBar) {
                let hist = bars.iter().map(|&(low, w)| flat(c * low * (1.0 + w), c * low)).collect();
                let (low, w, pos) = pred;
                let high = low * (1.0 + w);
                (hist, pbar(c * high, c * low, c * (low + pos * (high - low))))
            };
            let (h1, p1) = make(1.0);
            let (h2, p2) = make(scale);
            let r1 = williams_r(&h1, &p1, &cfg).unwrap();
            let r2 = williams_r(&h2, &p2, &cfg).unwrap();
            prop_assert!((0.0..=100.0).contains(&r1.value));
            prop_assert!((r1.value - r2.value).abs() < 1e-9);
        }
    }
}
