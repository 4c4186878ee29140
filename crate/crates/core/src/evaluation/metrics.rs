use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};
use crate::market::{OhlcBar, OhlcSeries};

/// Component order used by every per-component array: open, high, low, close.
pub const COMPONENTS: [&str; 4] = ["open", "high", "low", "close"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentMetrics {
    pub rmse: f64,
    pub mae: f64,
    pub mape: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Scored days.
    pub n: usize,
    /// Mean over days of the 4-component Euclidean error.
    pub rmse: f64,
    /// Mean over days of the summed absolute errors.
    pub mae: f64,
    /// Mean over days of the summed absolute relative errors, as a fraction.
    pub mape: f64,
    pub r2: f64,
    pub ss_residual: f64,
    pub ss_total: f64,
    /// Relative-error terms dropped because the actual price was zero.
    pub mape_excluded: usize,
    pub per_component: [ComponentMetrics; 4],
}

/// `1 − SS_res/SS_tot`; a constant target scores 1 when matched exactly and
/// 0 otherwise.
fn r_squared(ss_res: f64, ss_tot: f64) -> f64 {
    if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Error metrics over paired `[open, high, low, close]` rows.
pub fn compute_metrics_prices(actual: &[[f64; 4]], predicted: &[[f64; 4]]) -> Result<MetricsReport> {
    if actual.len() != predicted.len() {
        return Err(argument(format!(
            "{} actual days but {} predicted days",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(argument("metrics need at least one day"));
    }
    let n = actual.len();
    let nf = n as f64;
    let mut mean = [0.0; 4];
    for a in actual {
        for k in 0..4 {
            mean[k] += a[k] / nf;
        }
    }

    let (mut rmse, mut mae, mut mape) = (0.0, 0.0, 0.0);
    let mut excluded = 0;
    let mut sq = [0.0; 4];
    let mut abs = [0.0; 4];
    let mut rel = [0.0; 4];
    let mut tot = [0.0; 4];
    for (a, p) in actual.iter().zip(predicted) {
        let mut day_sq = 0.0;
        for k in 0..4 {
            let e = a[k] - p[k];
            day_sq += e * e;
            sq[k] += e * e;
            abs[k] += e.abs();
            mae += e.abs();
            tot[k] += (a[k] - mean[k]).powi(2);
            if a[k] == 0.0 {
                excluded += 1;
            } else {
                let r = (e / a[k]).abs();
                rel[k] += r;
                mape += r;
            }
        }
        rmse += day_sq.sqrt();
    }
    if excluded > 0 {
        log::warn!("{excluded} zero actual prices left out of MAPE");
    }
    let ss_residual: f64 = sq.iter().sum();
    let ss_total: f64 = tot.iter().sum();
    let per_component = std::array::from_fn(|k| ComponentMetrics {
        rmse: (sq[k] / nf).sqrt(),
        mae: abs[k] / nf,
        mape: rel[k] / nf,
        r2: r_squared(sq[k], tot[k]),
    });
    Ok(MetricsReport {
        n,
        rmse: rmse / nf,
        mae: mae / nf,
        mape: mape / nf,
        r2: r_squared(ss_residual, ss_total),
        ss_residual,
        ss_total,
        mape_excluded: excluded,
        per_component,
    })
}

pub fn compute_metrics(actual: &[OhlcBar], predicted: &[OhlcBar]) -> Result<MetricsReport> {
    let a: Vec<[f64; 4]> = actual.iter().map(OhlcBar::prices).collect();
    let p: Vec<[f64; 4]> = predicted.iter().map(OhlcBar::prices).collect();
    compute_metrics_prices(&a, &p)
}

/// Days on which a bar breaks at least one OHLC constraint (a flat bar with
/// `high == low` counts as broken).
pub fn count_constraint_failures(bars: &[OhlcBar]) -> usize {
    bars.iter().filter(|b| !b.satisfies_constraints()).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolatilityProfile {
    pub symbol: String,
    /// Population standard deviation per component.
    pub std_dev: [f64; 4],
    /// `std_dev` min-max scaled across the four components.
    pub normalized: [f64; 4],
}

impl VolatilityProfile {
    /// Component with the smallest spread.
    pub fn least_volatile(&self) -> &'static str {
        let k = (0..4)
            .min_by(|&a, &b| self.std_dev[a].total_cmp(&self.std_dev[b]))
            .expect("four components");
        COMPONENTS[k]
    }
}

pub fn volatility_profile(series: &[OhlcSeries]) -> Vec<VolatilityProfile> {
    series
        .iter()
        .map(|s| {
            let n = s.len().max(1) as f64;
            let mut mean = [0.0; 4];
            for b in s.bars() {
                for (m, p) in mean.iter_mut().zip(b.prices()) {
                    *m += p / n;
                }
            }
            let mut var = [0.0; 4];
            for b in s.bars() {
                for k in 0..4 {
                    var[k] += (b.prices()[k] - mean[k]).powi(2) / n;
                }
            }
            let std_dev = var.map(f64::sqrt);
            let lo = std_dev.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = std_dev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let normalized = if hi > lo {
                std_dev.map(|v| (v - lo) / (hi - lo))
            } else {
                [0.0; 4]
            };
            VolatilityProfile {
                symbol: s.symbol().to_string(),
                std_dev,
                normalized,
            }
        })
        .collect()
}
