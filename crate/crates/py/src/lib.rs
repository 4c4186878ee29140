//! Python bindings: price series, model training and prediction, backtests
//! and the indicator helpers, imported as `candlecast`.

use candlecast::evaluation::{compute_metrics_prices, run_backtest, BacktestConfig, BacktestReport, Forecaster};
use candlecast::features::{self, PipelineConfig, TargetTuple};
use candlecast::indicators::{self, IndicatorConfig};
use candlecast::market::{self, OhlcBar, SyntheticConfig};
use candlecast::predictor::{self, ForecastModel, ModelConfig, PredictedBar, Variant};
use chrono::NaiveDate;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(candlecast, CandlecastError, PyException);

fn err(e: candlecast::Error) -> PyErr {
    CandlecastError::new_err(e.to_string())
}

type Row = (String, f64, f64, f64, f64);

/// Daily OHLC bars for one symbol.
#[pyclass(name = "OhlcSeries", module = "candlecast", frozen)]
struct PySeries(market::OhlcSeries);

#[pymethods]
impl PySeries {
    /// Build from `(date, open, high, low, close)` rows, dates as `YYYY-MM-DD`.
    #[new]
    fn new(symbol: &str, rows: Vec<Row>) -> PyResult<Self> {
        let bars = rows
            .into_iter()
            .map(|(d, o, h, l, c)| {
                let date = NaiveDate::parse_from_str(&d, "%Y-%m-%d")
                    .map_err(|e| CandlecastError::new_err(format!("bad date `{d}`: {e}")))?;
                Ok(OhlcBar::new(date, o, h, l, c))
            })
            .collect::<PyResult<_>>()?;
        market::OhlcSeries::new(symbol, bars).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_csv(path: &str, symbol: &str) -> PyResult<Self> {
        let file = std::fs::File::open(path)?;
        market::parse_csv(file, symbol).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (symbol, seed, n_days = 1234, daily_volatility = 0.01))]
    fn synthetic(symbol: &str, seed: u64, n_days: usize, daily_volatility: f64) -> PyResult<Self> {
        let cfg = SyntheticConfig {
            seed,
            n_days,
            daily_volatility,
            ..Default::default()
        };
        market::generate_synthetic(symbol, &cfg).map(Self).map_err(err)
    }

    #[getter]
    fn symbol(&self) -> &str {
        self.0.symbol()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn rows(&self) -> Vec<Row> {
        self.0
            .bars()
            .iter()
            .map(|b| (b.date.to_string(), b.open, b.high, b.low, b.close))
            .collect()
    }

    fn to_csv(&self) -> String {
        market::to_csv_string(&self.0)
    }

    /// Number of days violating at least one price constraint.
    fn constraint_failures(&self) -> usize {
        market::check_constraints(&self.0).failing_days()
    }

    fn __repr__(&self) -> String {
        format!("OhlcSeries({:?}, {} bars)", self.0.symbol(), self.0.len())
    }
}

/// A trained forecaster for one symbol.
#[pyclass(name = "ForecastModel", module = "candlecast", frozen)]
struct PyModel(ForecastModel);

#[pymethods]
impl PyModel {
    /// Pretrain (when the variant uses the autoencoder) and train on `series`.
    #[staticmethod]
    #[pyo3(signature = (series, variant = "PF-AE-PMTL", seed = 0, epochs = 200, batch_size = None, shared_hidden = 32, head_hidden = 16, window = 20))]
    #[allow(clippy::too_many_arguments)]
    fn fit(
        py: Python<'_>,
        series: &PySeries,
        variant: &str,
        seed: u64,
        epochs: usize,
        batch_size: Option<usize>,
        shared_hidden: usize,
        head_hidden: usize,
        window: usize,
    ) -> PyResult<Self> {
        let variant: Variant = variant.parse().map_err(err)?;
        let mut cfg = ModelConfig::for_variant(variant);
        cfg.seed = seed;
        cfg.training.epochs = epochs;
        cfg.training.batch_size = batch_size;
        cfg.shared_hidden = shared_hidden;
        cfg.head_hidden = head_hidden;
        cfg.pipeline.window = window;
        let data = series.0.clone();
        py.detach(move || ForecastModel::fit(&data, &cfg))
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        ForecastModel::load(path).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        ForecastModel::from_json(text).map(Self).map_err(err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.0.save(path).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(err)
    }

    #[getter]
    fn variant(&self) -> &'static str {
        self.0.config.variant().name()
    }

    #[getter]
    fn window(&self) -> usize {
        self.0.window()
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.0.param_count()
    }

    #[getter]
    fn loss_history(&self) -> Vec<f64> {
        self.0.loss_history.clone()
    }

    /// Forecast the bar after the last one in `series` as `(open, high, low, close)`.
    fn predict_next(&self, series: &PySeries) -> PyResult<(f64, f64, f64, f64)> {
        let features = features::build_features(&series.0, &self.0.config.pipeline).map_err(err)?;
        let p = self.0.predict_day(&features, features.len()).map_err(err)?;
        Ok((p.open, p.high, p.low, p.close))
    }
}

fn report_dict<'py>(py: Python<'py>, report: &BacktestReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("test_days", report.test_days)?;
    d.set_item("warmup_skipped", report.warmup_skipped)?;
    d.set_item("constraint_failures", report.constraint_failures)?;
    d.set_item("total_actual_profit", report.total_actual_profit)?;
    let picks: Vec<(String, String, f64, f64)> = report
        .days
        .iter()
        .map(|day| {
            (
                day.date.to_string(),
                day.top_pick.clone(),
                day.predicted_profit,
                day.actual_profit,
            )
        })
        .collect();
    d.set_item("days", picks)?;
    let stocks = PyDict::new(py);
    for s in &report.stocks {
        let m = PyDict::new(py);
        m.set_item("rmse", s.metrics.rmse)?;
        m.set_item("mae", s.metrics.mae)?;
        m.set_item("mape", s.metrics.mape)?;
        m.set_item("r2", s.metrics.r2)?;
        m.set_item("constraint_failures", s.constraint_failures)?;
        stocks.set_item(&s.symbol, m)?;
    }
    d.set_item("stocks", stocks)?;
    d.set_item("json", report.to_json().map_err(err)?)?;
    Ok(d)
}

/// Walk forward over the last `test_len` days with one model per series.
#[pyfunction]
#[pyo3(signature = (models, series, test_len = 350, lookback = 14, threshold = 80.0))]
fn backtest<'py>(
    py: Python<'py>,
    models: Vec<PyRef<'py, PyModel>>,
    series: Vec<PyRef<'py, PySeries>>,
    test_len: usize,
    lookback: usize,
    threshold: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let forecasters: Vec<&dyn Forecaster> = models.iter().map(|m| &m.0 as &dyn Forecaster).collect();
    let data: Vec<market::OhlcSeries> = series.iter().map(|s| s.0.clone()).collect();
    let cfg = BacktestConfig {
        test_len,
        indicators: IndicatorConfig { lookback, threshold },
        pipeline: PipelineConfig::default(),
    };
    let report = run_backtest(&forecasters, &data, &cfg).map_err(err)?;
    report_dict(py, &report)
}

#[pyfunction]
fn norm_range(x: f64) -> PyResult<f64> {
    features::norm_range(x).map_err(err)
}

#[pyfunction]
fn denorm_range(y: f64) -> PyResult<f64> {
    features::denorm_range(y).map_err(err)
}

/// Rebuild `(open, high, low, close)` from head outputs `(y_low, y_open, y_high, y_close)`.
#[pyfunction]
#[pyo3(signature = (outputs, clamp = 1e-6))]
fn reconstruct_prices(outputs: [f64; 4], clamp: f64) -> (f64, f64, f64, f64) {
    let p = predictor::reconstruct_prices(&TargetTuple::from_array(outputs), clamp);
    (p.open, p.high, p.low, p.close)
}

/// %R magnitude over the last `lookback - 1` bars of `history` plus a
/// predicted bar.
#[pyfunction]
#[pyo3(signature = (history, predicted, lookback = 14))]
fn williams_r(history: &PySeries, predicted: (f64, f64, f64, f64), lookback: usize) -> PyResult<(f64, bool)> {
    let (open, high, low, close) = predicted;
    let cfg = IndicatorConfig {
        lookback,
        ..Default::default()
    };
    let bars = history.0.bars();
    let past = &bars[bars.len().saturating_sub(lookback.saturating_sub(1))..];
    let r = indicators::williams_r(past, &PredictedBar { open, high, low, close }, &cfg).map_err(err)?;
    Ok((r.value, r.degenerate))
}

/// RMSE, MAE, MAPE and R² over rows of `(open, high, low, close)`.
#[pyfunction]
fn compute_metrics<'py>(
    py: Python<'py>,
    actual: Vec<[f64; 4]>,
    predicted: Vec<[f64; 4]>,
) -> PyResult<Bound<'py, PyDict>> {
    let m = compute_metrics_prices(&actual, &predicted).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("n", m.n)?;
    d.set_item("rmse", m.rmse)?;
    d.set_item("mae", m.mae)?;
    d.set_item("mape", m.mape)?;
    d.set_item("r2", m.r2)?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "candlecast")]
fn candlecast_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CandlecastError", m.py().get_type::<CandlecastError>())?;
    m.add("VARIANTS", Variant::ALL.map(Variant::name).to_vec())?;
    m.add_class::<PySeries>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(backtest, m)?)?;
    m.add_function(wrap_pyfunction!(norm_range, m)?)?;
    m.add_function(wrap_pyfunction!(denorm_range, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct_prices, m)?)?;
    m.add_function(wrap_pyfunction!(williams_r, m)?)?;
    m.add_function(wrap_pyfunction!(compute_metrics, m)?)?;
    Ok(())
}
