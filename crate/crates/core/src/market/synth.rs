//! Seeded geometric-random-walk OHLC generator.
//!
//! Closes follow `C_t = C_{t-1}·exp(μ − σ²/2 + σZ)`. The open is the previous
//! close perturbed by a smaller shock; high and low stretch `max(O,C)` and
//! `min(O,C)` by `range_factor·|Z|`. An optional regime jump multiplies the
//! whole price level on one day.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{OhlcBar, OhlcSeries};
use crate::error::{argument, Result};

/// A one-day level shift, e.g. `factor = 0.5` halves the price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeJump {
    pub day: usize,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub n_days: usize,
    pub start_price: f64,
    /// Daily log-return standard deviation σ.
    pub daily_volatility: f64,
    /// Daily log drift μ.
    pub drift: f64,
    /// Intraday stretch of high/low beyond the open-close body.
    pub range_factor: f64,
    /// Open shock as a multiple of σ.
    pub open_noise: f64,
    pub jump: Option<RegimeJump>,
    pub start_date: NaiveDate,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_days: 1234,
            start_price: 100.0,
            daily_volatility: 0.01,
            drift: 0.0002,
            range_factor: 0.006,
            open_noise: 0.3,
            jump: None,
            start_date: NaiveDate::from_ymd_opt(2014, 1, 1).expect("valid date"),
        }
    }
}

pub fn generate_synthetic(symbol: &str, cfg: &SyntheticConfig) -> Result<OhlcSeries> {
    if cfg.n_days == 0 {
        return Err(argument("synthetic series needs at least one day"));
    }
    let positive = |v: f64| v > 0.0 && v.is_finite();
    if !positive(cfg.start_price) || !positive(cfg.daily_volatility) {
        return Err(argument("start price and volatility must be positive"));
    }
    let non_negative = |v: f64| v >= 0.0 && v.is_finite();
    if !non_negative(cfg.range_factor) || !non_negative(cfg.open_noise) || !cfg.drift.is_finite() {
        return Err(argument("range factor and open noise must be non-negative"));
    }
    if let Some(j) = cfg.jump {
        if !positive(j.factor) {
            return Err(argument("regime jump factor must be positive"));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let sigma = cfg.daily_volatility;
    let mut prev_close = cfg.start_price;
    let mut date = business_day_on_or_after(cfg.start_date);
    let mut bars = Vec::with_capacity(cfg.n_days);

    for day in 0..cfg.n_days {
        let (z_open, z_close, z_up, z_down) = (normal(), normal(), normal(), normal());
        let level = match cfg.jump {
            Some(j) if j.day == day => j.factor,
            _ => 1.0,
        };
        let open = prev_close * level * (cfg.open_noise * sigma * z_open).exp();
        let close = prev_close * level * (cfg.drift - 0.5 * sigma * sigma + sigma * z_close).exp();
        let up = cfg.range_factor * z_up.abs();
        let down = (cfg.range_factor * z_down.abs()).min(0.5);
        let mut high = open.max(close) * (1.0 + up);
        let low = open.min(close) * (1.0 - down);
        if high <= low {
            high = low * (1.0 + 1e-9);
        }
        bars.push(OhlcBar::new(date, open, high, low, close));
        prev_close = close;
        date = next_business_day(date);
    }
    OhlcSeries::new(symbol, bars)
}

/// `n` symbols named `SYN00`, `SYN01`, ... with seeds derived from
/// `base.seed` and start prices staggered so levels differ.
pub fn generate_universe(base: &SyntheticConfig, n: usize) -> Result<Vec<OhlcSeries>> {
    (0..n)
        .map(|k| {
            let cfg = SyntheticConfig {
                seed: base.seed.wrapping_mul(1_000_003).wrapping_add(k as u64),
                start_price: base.start_price * (1.0 + 0.5 * k as f64),
                ..base.clone()
            };
            generate_synthetic(&format!("SYN{k:02}"), &cfg)
        })
        .collect()
}

fn business_day_on_or_after(d: NaiveDate) -> NaiveDate {
    match d.weekday() {
        Weekday::Sat => d + Days::new(2),
        Weekday::Sun => d + Days::new(1),
        _ => d,
    }
}

fn next_business_day(d: NaiveDate) -> NaiveDate {
    business_day_on_or_after(d + Days::new(1))
}
