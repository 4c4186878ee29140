use std::io::Write;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics_prices, count_constraint_failures, MetricsReport};
use crate::error::{argument, Error, Result};
use crate::features::{build_features, FeatureVector, PipelineConfig};
use crate::indicators::{actual_profit, predicted_profit, williams_r, IndicatorConfig, Recommendation, SymbolSignal};
use crate::market::{OhlcBar, OhlcSeries};
use crate::predictor::{ForecastModel, PredictedBar};

/// Anything that can forecast day `day` of a series from the days before it.
pub trait Forecaster {
    /// Days of history needed before the forecast day.
    fn history(&self) -> usize;

    /// Forecast bar `day`; only `bars[..day]` and `features[..day]` may be used.
    fn forecast(&self, bars: &[OhlcBar], features: &[FeatureVector], day: usize) -> Result<PredictedBar>;
}

impl Forecaster for ForecastModel {
    fn history(&self) -> usize {
        self.window()
    }

    fn forecast(&self, _bars: &[OhlcBar], features: &[FeatureVector], day: usize) -> Result<PredictedBar> {
        self.predict_day(features, day)
    }
}

/// Peeks at the answer: returns the actual bar. Used to check the scoring
/// and recommendation plumbing.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleForecaster;

impl Forecaster for OracleForecaster {
    fn history(&self) -> usize {
        0
    }

    fn forecast(&self, bars: &[OhlcBar], _features: &[FeatureVector], day: usize) -> Result<PredictedBar> {
        let b = bars
            .get(day)
            .ok_or_else(|| argument(format!("day {day} is past the end of the series")))?;
        Ok(PredictedBar {
            open: b.open,
            high: b.high,
            low: b.low,
            close: b.close,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub test_len: usize,
    pub indicators: IndicatorConfig,
    pub pipeline: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StockDay {
    pub symbol: String,
    pub predicted: PredictedBar,
    /// Actual `[open, high, low, close]`.
    pub actual: [f64; 4],
    pub predicted_profit: f64,
    pub actual_profit: f64,
    pub williams_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestDay {
    pub date: NaiveDate,
    pub top_pick: String,
    pub predicted_profit: f64,
    /// What the top pick actually earned.
    pub actual_profit: f64,
    pub buy_signals: Vec<String>,
    pub stocks: Vec<StockDay>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StockSummary {
    pub symbol: String,
    pub metrics: MetricsReport,
    pub constraint_failures: usize,
    /// Days where the %R window had zero range.
    pub degenerate_williams_r: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub test_days: usize,
    /// Leading test days without enough history to forecast.
    pub warmup_skipped: usize,
    pub days: Vec<BacktestDay>,
    pub stocks: Vec<StockSummary>,
    pub constraint_failures: usize,
    pub total_actual_profit: f64,
    /// Wall-clock time; left out of serialized reports so they stay
    /// byte-identical across runs.
    #[serde(skip)]
    pub runtime: Duration,
}

impl BacktestReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per scored day.
    pub fn write_daily_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "date",
            "top_pick",
            "predicted_profit",
            "actual_profit",
            "cumulative_profit",
            "buy_signals",
        ])?;
        let mut cumulative = 0.0;
        for d in &self.days {
            cumulative += d.actual_profit;
            w.write_record([
                d.date.to_string(),
                d.top_pick.clone(),
                d.predicted_profit.to_string(),
                d.actual_profit.to_string(),
                cumulative.to_string(),
                d.buy_signals.join(";"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per stock.
    pub fn write_metrics_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["symbol", "n", "rmse", "mae", "mape", "r2", "constraint_failures"])?;
        for s in &self.stocks {
            let m = &s.metrics;
            w.write_record([
                s.symbol.clone(),
                m.n.to_string(),
                m.rmse.to_string(),
                m.mae.to_string(),
                m.mape.to_string(),
                m.r2.to_string(),
                s.constraint_failures.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_aligned(series: &[OhlcSeries]) -> Result<()> {
    let first = series
        .first()
        .ok_or_else(|| argument("backtest needs at least one series"))?;
    for s in &series[1..] {
        if s.len() != first.len() || !s.dates().eq(first.dates()) {
            return Err(Error::Data(format!(
                "{} and {} do not cover the same trading days",
                first.symbol(),
                s.symbol()
            )));
        }
    }
    Ok(())
}

/// Walk forward through the last `test_len` days: forecast every stock,
/// rank by predicted profit, then score the pick and the forecasts against
/// what actually happened.
pub fn run_backtest(
    forecasters: &[&dyn Forecaster],
    series: &[OhlcSeries],
    cfg: &BacktestConfig,
) -> Result<BacktestReport> {
    let started = Instant::now();
    cfg.indicators.validate()?;
    cfg.pipeline.validate()?;
    if forecasters.len() != series.len() {
        return Err(argument(format!(
            "{} forecasters for {} series",
            forecasters.len(),
            series.len()
        )));
    }
    check_aligned(series)?;
    let n = series[0].len();
    if cfg.test_len == 0 || cfg.test_len >= n {
        return Err(argument(format!(
            "test length {} must be between 1 and {}",
            cfg.test_len,
            n.saturating_sub(1)
        )));
    }
    let d = cfg.indicators.lookback;
    let need = forecasters
        .iter()
        .map(|f| f.history())
        .max()
        .unwrap_or(0)
        .max(d - 1)
        .max(1);
    let first_test = n - cfg.test_len;
    let start = first_test.max(need);
    if start >= n {
        return Err(argument(format!(
            "no test day has the {need} days of history a forecast needs"
        )));
    }

    let features: Vec<Vec<FeatureVector>> = series
        .iter()
        .map(|s| build_features(s, &cfg.pipeline))
        .collect::<Result<_>>()?;

    let mut days = Vec::with_capacity(n - start);
    let mut predicted: Vec<Vec<[f64; 4]>> = vec![Vec::with_capacity(n - start); series.len()];
    let mut predicted_bars: Vec<Vec<OhlcBar>> = vec![Vec::with_capacity(n - start); series.len()];
    let mut degenerate = vec![0usize; series.len()];
    for day in start..n {
        let date = series[0].bars()[day].date;
        let mut signals = Vec::with_capacity(series.len());
        let mut stocks = Vec::with_capacity(series.len());
        for (k, (f, s)) in forecasters.iter().zip(series).enumerate() {
            let bars = s.bars();
            let pred = f.forecast(bars, &features[k], day)?;
            let r = williams_r(&bars[day + 1 - d..day], &pred, &cfg.indicators)?;
            let prev_low = bars[day - 1].low;
            let pp = predicted_profit(pred.high, prev_low);
            degenerate[k] += r.degenerate as usize;
            predicted[k].push(pred.prices());
            predicted_bars[k].push(pred.to_bar(date));
            signals.push(SymbolSignal {
                symbol: s.symbol().to_string(),
                predicted: pred,
                predicted_profit: pp,
                williams_r: r.value,
                williams_r_degenerate: r.degenerate,
            });
            stocks.push(StockDay {
                symbol: s.symbol().to_string(),
                predicted: pred,
                actual: bars[day].prices(),
                predicted_profit: pp,
                actual_profit: actual_profit(bars[day].high, prev_low),
                williams_r: r.value,
            });
        }
        let rec = Recommendation::from_signals(date, signals, 1, &cfg.indicators);
        let top = &rec.top_profit[0];
        let top_actual = stocks
            .iter()
            .find(|s| s.symbol == top.symbol)
            .map(|s| s.actual_profit)
            .expect("top pick is one of the stocks");
        days.push(BacktestDay {
            date,
            top_pick: top.symbol.clone(),
            predicted_profit: top.predicted_profit,
            actual_profit: top_actual,
            buy_signals: rec.buy_signals.into_iter().map(|b| b.symbol).collect(),
            stocks,
        });
    }

    let mut summaries = Vec::with_capacity(series.len());
    for (k, s) in series.iter().enumerate() {
        let actual: Vec<[f64; 4]> = s.bars()[start..].iter().map(OhlcBar::prices).collect();
        summaries.push(StockSummary {
            symbol: s.symbol().to_string(),
            metrics: compute_metrics_prices(&actual, &predicted[k])?,
            constraint_failures: count_constraint_failures(&predicted_bars[k]),
            degenerate_williams_r: degenerate[k],
        });
    }
    let total_actual_profit = days.iter().map(|d| d.actual_profit).sum();
    Ok(BacktestReport {
        test_days: cfg.test_len,
        warmup_skipped: start - first_test,
        constraint_failures: summaries.iter().map(|s| s.constraint_failures).sum(),
        days,
        stocks: summaries,
        total_actual_profit,
        runtime: started.elapsed(),
    })
}
