use std::thread;

use crate::error::{argument, Result};
use crate::market::OhlcSeries;
use crate::predictor::{ForecastModel, ModelConfig};

/// Fit one model per series with up to `jobs` threads. Each fit depends
/// only on its own series and `cfg`, so the result does not depend on
/// `jobs`.
pub fn fit_models(series: &[OhlcSeries], cfg: &ModelConfig, jobs: usize) -> Result<Vec<ForecastModel>> {
    if jobs == 0 {
        return Err(argument("jobs must be at least 1"));
    }
    if jobs == 1 || series.len() <= 1 {
        return series.iter().map(|s| ForecastModel::fit(s, cfg)).collect();
    }
    let chunk = series.len().div_ceil(jobs);
    thread::scope(|scope| {
        let handles: Vec<_> = series
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|s| ForecastModel::fit(s, cfg)).collect::<Vec<_>>()))
            .collect();
        let mut out = Vec::with_capacity(series.len());
        for h in handles {
            for fitted in h.join().expect("training thread panicked") {
                out.push(fitted?);
            }
        }
        Ok(out)
    })
}
