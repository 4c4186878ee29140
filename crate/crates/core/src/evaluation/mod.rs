//! Scoring forecasts: error metrics, constraint audits, volatility
//! profiles, the walk-forward backtest and hyperparameter sweeps.

mod backtest;
mod metrics;
mod parallel;
mod sweep;

pub use backtest::{
    run_backtest, BacktestConfig, BacktestDay, BacktestReport, Forecaster, OracleForecaster, StockDay, StockSummary,
};
pub use metrics::{
    compute_metrics, compute_metrics_prices, count_constraint_failures, volatility_profile, ComponentMetrics,
    MetricsReport, VolatilityProfile, COMPONENTS,
};
pub use parallel::fit_models;
pub use sweep::{sweep, validation_len, SweepParameter, SweepRow, SweepTable, VALIDATION_FRACTION};
