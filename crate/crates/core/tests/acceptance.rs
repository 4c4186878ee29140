//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints exactly one PASS/FAIL line; the process fails if any criterion
//! does.

use std::panic::{self, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use candlecast::evaluation::{
    compute_metrics_prices, run_backtest, BacktestConfig, BacktestReport, Forecaster, OracleForecaster,
};
use candlecast::features::{
    bar_features, denorm_range, norm_range, FeatureVector, PipelineConfig, TargetTuple, WindowedSample,
};
use candlecast::indicators::{williams_r, IndicatorConfig};
use candlecast::market::{generate_universe, split_series, OhlcBar, OhlcSeries, SyntheticConfig};
use candlecast::nn::{finite_difference_gradient, glorot_init, relative_error, Activation, DenseLayer, ParamSet};
use candlecast::predictor::{
    build_model, compute_gradients, reconstruct_prices, ForecastModel, ModelConfig, ModelParams, PredictedBar, Variant,
};
use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 6, 1).unwrap()
}

/// A random bar satisfying every constraint, prices spanning several decades.
fn random_bar(rng: &mut ChaCha8Rng) -> OhlcBar {
    let low = 10f64.powf(rng.random_range(-1.0..5.0));
    let high = low * (1.0 + rng.random_range(1e-4..0.5));
    let open = low + rng.random::<f64>() * (high - low);
    let close = low + rng.random::<f64>() * (high - low);
    OhlcBar::new(date(), open, high, low, close)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let x: f64 = 10f64.powf(rng.random_range(-6.0..6.0)).min(1e6);
        let back = denorm_range(norm_range(x).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        worst = worst.max((x - back).abs() / (1.0 + x));
    }
    check(
        worst <= 1e-6,
        format!("max |x - denorm(norm(x))|/(1+x) = {worst:.3e} over 10^4 draws"),
    )
}

/// Small models on several universes: the backtest must never emit a bar
/// that breaks a constraint.
fn end_to_end_failures() -> Result<Vec<(String, usize)>, String> {
    let mut out = Vec::new();
    let universes = [
        (
            "seed 3",
            SyntheticConfig {
                seed: 3,
                n_days: 260,
                ..Default::default()
            },
        ),
        (
            "seed 4, high volatility",
            SyntheticConfig {
                seed: 4,
                n_days: 260,
                daily_volatility: 0.04,
                ..Default::default()
            },
        ),
        (
            "seed 5, 50% drop",
            SyntheticConfig {
                seed: 5,
                n_days: 260,
                jump: Some(candlecast::market::RegimeJump { day: 200, factor: 0.5 }),
                ..Default::default()
            },
        ),
    ];
    for (name, syn) in universes {
        let series = generate_universe(&syn, 3).map_err(|e| e.to_string())?;
        for variant in Variant::ALL {
            let mut cfg = ModelConfig::for_variant(variant);
            cfg.shared_hidden = 8;
            cfg.head_hidden = 4;
            cfg.training.epochs = 2;
            cfg.training.batch_size = Some(32);
            let models: Vec<ForecastModel> = series
                .iter()
                .map(|s| ForecastModel::fit(&split_series(s, 60)?.0, &cfg))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            let f: Vec<&dyn Forecaster> = models.iter().map(|m| m as &dyn Forecaster).collect();
            let report = run_backtest(&f, &series, &backtest_config(60)).map_err(|e| e.to_string())?;
            out.push((format!("{name} {variant}"), report.constraint_failures));
        }
    }
    Ok(out)
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut violations = 0;
    for _ in 0..100_000 {
        let h = TargetTuple::from_array([rng.random(), rng.random(), rng.random(), rng.random()]);
        if !reconstruct_prices(&h, 1e-6).to_bar(date()).satisfies_constraints() {
            violations += 1;
        }
    }
    let e2e = end_to_end_failures()?;
    let e2e_total: usize = e2e.iter().map(|(_, n)| n).sum();
    let ok = violations == 0 && e2e_total == 0;
    check(
        ok,
        format!(
            "{violations} violations in 10^5 fuzzed outputs; {e2e_total} failing days over {} end-to-end backtests",
            e2e.len()
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let cfg = PipelineConfig::default();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let bar = random_bar(&mut rng);
        let f = bar_features(&bar, &cfg).map_err(|e| e.to_string())?;
        let rebuilt = reconstruct_prices(&f.targets(), cfg.clamp);
        for (got, want) in rebuilt.prices().iter().zip(bar.prices()) {
            worst = worst.max((got - want).abs() / want);
        }
    }
    check(
        worst <= 1e-6,
        format!("max relative reconstruction error {worst:.3e} over 10^3 bars"),
    )
}

fn random_samples(n: usize, window: usize, rng: &mut ChaCha8Rng) -> Vec<WindowedSample> {
    (0..n)
        .map(|k| WindowedSample {
            window: (0..window)
                .map(|_| FeatureVector::from_array(std::array::from_fn(|_| rng.random_range(0.02..0.98))))
                .collect(),
            target: TargetTuple::from_array(std::array::from_fn(|_| rng.random_range(0.05..0.95))),
            target_index: window + k,
        })
        .collect()
}

fn proposed_model(cfg: &ModelConfig, rng: &mut ChaCha8Rng) -> ModelParams {
    let enc = DenseLayer::new(
        glorot_init(cfg.autoencoder.hidden, 8, rng.random()),
        vec![0.0; 4],
        Activation::Sigmoid,
    )
    .expect("encoder shape");
    let mut params = build_model(cfg, Some(&enc)).expect("model");
    // Move biases off their initial values so every path carries gradient.
    let flat: Vec<f64> = params
        .flatten()
        .iter()
        .map(|w| w + rng.random_range(-0.05..0.05))
        .collect();
    params.assign_flat(&flat).expect("same length");
    params
}

/// Worst relative error between analytic and central-difference gradients
/// over the parameter indices `which` (all when `None`).
fn gradient_error(params: &ModelParams, samples: &[WindowedSample], which: Option<&[usize]>) -> f64 {
    const H: f64 = 1e-5;
    const FLOOR: f64 = 1e-7;
    let refs: Vec<&WindowedSample> = samples.iter().collect();
    let (_, analytic) = compute_gradients(params, &refs).expect("gradients");
    let analytic = analytic.flatten();
    match which {
        None => {
            let numeric = finite_difference_gradient(|p: &ModelParams| p.loss(&refs), params, H).expect("fd");
            analytic
                .iter()
                .zip(numeric.flatten())
                .map(|(a, n)| relative_error(*a, n, FLOOR))
                .fold(0.0, f64::max)
        }
        Some(idx) => {
            let base = params.flatten();
            let mut probe = params.clone();
            let mut flat = base.clone();
            let mut worst: f64 = 0.0;
            for &k in idx {
                flat[k] = base[k] + H;
                probe.assign_flat(&flat).unwrap();
                let plus = probe.loss(&refs);
                flat[k] = base[k] - H;
                probe.assign_flat(&flat).unwrap();
                let minus = probe.loss(&refs);
                flat[k] = base[k];
                worst = worst.max(relative_error(analytic[k], (plus - minus) / (2.0 * H), FLOOR));
            }
            worst
        }
    }
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let samples = random_samples(5, 20, &mut rng);

    // Every entry of the complete PF-AE-PMTL stack at reduced width.
    let mut narrow = ModelConfig::for_variant(Variant::PfAePmtl);
    narrow.shared_hidden = 16;
    narrow.head_hidden = 8;
    let p_narrow = proposed_model(&narrow, &mut rng);
    let err_narrow = gradient_error(&p_narrow, &samples, None);

    // Default width: a random sample of entries from every tensor.
    let p_full = proposed_model(&ModelConfig::default(), &mut rng);
    let n = p_full.param_count();
    let mut idx: Vec<usize> = (0..1000).map(|_| rng.random_range(0..n)).collect();
    let mut offset = 0;
    for t in p_full.tensors() {
        idx.push(offset + rng.random_range(0..t.len()));
        offset += t.len();
    }
    let err_full = gradient_error(&p_full, &samples, Some(&idx));

    let worst = err_narrow.max(err_full);
    check(
        worst <= 1e-4,
        format!(
            "max relative error {err_narrow:.2e} over all {} entries (widths 16/8), {err_full:.2e} over {} sampled entries of the default {n}-parameter model",
            p_narrow.param_count(),
            idx.len()
        ),
    )
}

/// Straight-from-the-definitions metrics, one component at a time.
fn brute_force_metrics(a: &[[f64; 4]], p: &[[f64; 4]]) -> (f64, f64, f64, f64) {
    let n = a.len() as f64;
    let mut rmse = 0.0;
    let mut mae = 0.0;
    let mut mape = 0.0;
    for i in 0..a.len() {
        let mut s = 0.0;
        for k in 0..4 {
            s += (a[i][k] - p[i][k]) * (a[i][k] - p[i][k]);
            mae += (a[i][k] - p[i][k]).abs();
            mape += ((a[i][k] - p[i][k]) / a[i][k]).abs();
        }
        rmse += s.sqrt();
    }
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for k in 0..4 {
        let mean: f64 = a.iter().map(|r| r[k]).sum::<f64>() / n;
        for i in 0..a.len() {
            ss_res += (a[i][k] - p[i][k]).powi(2);
            ss_tot += (a[i][k] - mean).powi(2);
        }
    }
    (rmse / n, mae / n, mape / n, 1.0 - ss_res / ss_tot)
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(2..=10);
        let a: Vec<[f64; 4]> = (0..n)
            .map(|_| std::array::from_fn(|_| rng.random_range(1.0..200.0)))
            .collect();
        let p: Vec<[f64; 4]> = a
            .iter()
            .map(|r| r.map(|v| v * (1.0 + rng.random_range(-0.2..0.2))))
            .collect();
        let m = compute_metrics_prices(&a, &p).map_err(|e| e.to_string())?;
        let (rmse, mae, mape, r2) = brute_force_metrics(&a, &p);
        for (x, y) in [(m.rmse, rmse), (m.mae, mae), (m.mape, mape), (m.r2, r2)] {
            worst = worst.max((x - y).abs() / y.abs().max(1.0));
        }
    }
    check(
        worst <= 1e-10,
        format!("max disagreement with the brute-force reference {worst:.2e} on 50 instances"),
    )
}

const TEST_DAYS: usize = 350;
const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
/// Fixed training budget so the whole ablation fits the time limit.
const ABLATION_EPOCHS: usize = 12;
const ABLATION_BATCH: usize = 32;

fn pinned_universe() -> Vec<OhlcSeries> {
    generate_universe(&SyntheticConfig::default(), 3).expect("universe")
}

fn backtest_config(test_len: usize) -> BacktestConfig {
    BacktestConfig {
        test_len,
        indicators: IndicatorConfig::default(),
        pipeline: PipelineConfig::default(),
    }
}

struct AblationRun {
    variant: Variant,
    seed: u64,
    report: BacktestReport,
    fit_time: Duration,
}

fn ablation_runs() -> &'static Result<Vec<AblationRun>, String> {
    static RUNS: OnceLock<Result<Vec<AblationRun>, String>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let universe = pinned_universe();
        let train: Vec<OhlcSeries> = universe
            .iter()
            .map(|s| split_series(s, TEST_DAYS).map(|(t, _)| t))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let mut runs = Vec::new();
        for variant in [Variant::PfAePmtl, Variant::PfPmtl] {
            for seed in SEEDS {
                let mut cfg = ModelConfig::for_variant(variant);
                cfg.seed = seed;
                cfg.training.epochs = ABLATION_EPOCHS;
                cfg.training.batch_size = Some(ABLATION_BATCH);
                let started = Instant::now();
                let models: Vec<ForecastModel> = train
                    .iter()
                    .map(|s| ForecastModel::fit(s, &cfg))
                    .collect::<Result<_, _>>()
                    .map_err(|e| e.to_string())?;
                let fit_time = started.elapsed();
                let f: Vec<&dyn Forecaster> = models.iter().map(|m| m as &dyn Forecaster).collect();
                let report = run_backtest(&f, &universe, &backtest_config(TEST_DAYS)).map_err(|e| e.to_string())?;
                runs.push(AblationRun {
                    variant,
                    seed,
                    report,
                    fit_time,
                });
            }
        }
        Ok(runs)
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn mean_over_stocks(r: &BacktestReport, f: impl Fn(&candlecast::evaluation::MetricsReport) -> f64) -> f64 {
    r.stocks.iter().map(|s| f(&s.metrics)).sum::<f64>() / r.stocks.len() as f64
}

fn criterion_6() -> Outcome {
    let runs = ablation_runs().as_ref().map_err(Clone::clone)?;
    let summary = |v: Variant| {
        let mine: Vec<&AblationRun> = runs.iter().filter(|r| r.variant == v).collect();
        let mape = median(mine.iter().map(|r| mean_over_stocks(&r.report, |m| m.mape)).collect());
        let r2 = median(mine.iter().map(|r| mean_over_stocks(&r.report, |m| m.r2)).collect());
        let secs: f64 = mine.iter().map(|r| r.fit_time.as_secs_f64()).sum();
        (mape, r2, secs)
    };
    let (ae_mape, ae_r2, ae_secs) = summary(Variant::PfAePmtl);
    let (pm_mape, pm_r2, pm_secs) = summary(Variant::PfPmtl);
    let ordering = if ae_mape <= pm_mape { "holds" } else { "does not hold" };
    let seeds: Vec<String> = runs
        .iter()
        .map(|r| {
            format!(
                "{}/{}: {:.4}",
                r.variant,
                r.seed,
                mean_over_stocks(&r.report, |m| m.mape)
            )
        })
        .collect();
    println!("    per-run MAPE: {}", seeds.join(", "));
    check(
        ae_mape < 0.05 && ae_r2 > 0.0,
        format!(
            "median MAPE PF-AE-PMTL {ae_mape:.4} (R2 {ae_r2:.3}) vs PF-PMTL {pm_mape:.4} (R2 {pm_r2:.3}); ordering {ordering}; \
             gate MAPE < 0.05 and R2 > 0; {ABLATION_EPOCHS} epochs, training {:.0}s",
            ae_secs + pm_secs
        ),
    )
}

fn criterion_7() -> Outcome {
    let universe = pinned_universe();
    let oracle = OracleForecaster;
    let f: Vec<&dyn Forecaster> = vec![&oracle; universe.len()];
    let report = run_backtest(&f, &universe, &backtest_config(TEST_DAYS)).map_err(|e| e.to_string())?;
    let mismatches = report
        .days
        .iter()
        .filter(|d| {
            let best = d
                .stocks
                .iter()
                .map(|s| s.actual_profit)
                .fold(f64::NEG_INFINITY, f64::max);
            d.actual_profit != best
        })
        .count();

    let runs = ablation_runs().as_ref().map_err(Clone::clone)?;
    let trained: Vec<f64> = runs
        .iter()
        .filter(|r| r.variant == Variant::PfAePmtl)
        .map(|r| r.report.total_actual_profit)
        .collect();
    let losing_days = runs
        .iter()
        .find(|r| r.variant == Variant::PfAePmtl)
        .map_or(0, |r| r.report.days.iter().filter(|d| d.actual_profit < 0.0).count());
    check(
        mismatches == 0 && trained.iter().all(|&p| p > 0.0),
        format!(
            "oracle pick missed the best stock on {mismatches} of {} days; PF-AE-PMTL cumulative profit per seed {:?} ({losing_days} losing days for seed 0)",
            report.days.len(),
            trained.iter().map(|p| format!("{p:.2}")).collect::<Vec<_>>()
        ),
    )
}

fn criterion_8() -> Outcome {
    let cfg = IndicatorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut out_of_range = 0;
    let mut worst_scale: f64 = 0.0;
    for _ in 0..1000 {
        let history: Vec<OhlcBar> = (0..cfg.lookback - 1).map(|_| random_bar(&mut rng)).collect();
        let b = random_bar(&mut rng);
        let pred = PredictedBar {
            open: b.open,
            high: b.high,
            low: b.low,
            close: b.close,
        };
        let c = 10f64.powf(rng.random_range(-3.0..3.0));
        let r = williams_r(&history, &pred, &cfg).map_err(|e| e.to_string())?;
        let scaled_hist: Vec<OhlcBar> = history
            .iter()
            .map(|h| OhlcBar::new(h.date, c * h.open, c * h.high, c * h.low, c * h.close))
            .collect();
        let scaled = PredictedBar {
            open: c * pred.open,
            high: c * pred.high,
            low: c * pred.low,
            close: c * pred.close,
        };
        let rs = williams_r(&scaled_hist, &scaled, &cfg).map_err(|e| e.to_string())?;
        if !(0.0..=100.0).contains(&r.value) {
            out_of_range += 1;
        }
        worst_scale = worst_scale.max((r.value - rs.value).abs());
    }
    let hist = vec![OhlcBar::new(date(), 95.0, 100.0, 90.0, 95.0); cfg.lookback - 1];
    let at = |close: f64| {
        let pred = PredictedBar {
            open: 100.0,
            high: 110.0,
            low: 95.0,
            close,
        };
        williams_r(&hist, &pred, &cfg).map(|r| r.value)
    };
    let (top, bottom) = (
        at(110.0).map_err(|e| e.to_string())?,
        at(90.0).map_err(|e| e.to_string())?,
    );
    check(
        out_of_range == 0 && top == 0.0 && bottom == 100.0 && worst_scale < 1e-9,
        format!(
            "{out_of_range} values outside [0,100]; close at max -> {top}, close at min -> {bottom}; max change under scaling {worst_scale:.1e}"
        ),
    )
}

fn determinism_pass() -> Result<(Vec<String>, String, String), String> {
    let universe = generate_universe(
        &SyntheticConfig {
            seed: 9,
            n_days: 300,
            ..Default::default()
        },
        3,
    )
    .map_err(|e| e.to_string())?;
    let mut cfg = ModelConfig::default();
    cfg.seed = 42;
    cfg.shared_hidden = 8;
    cfg.head_hidden = 4;
    cfg.training.epochs = 3;
    cfg.training.batch_size = Some(16);
    let models: Vec<ForecastModel> = universe
        .iter()
        .map(|s| ForecastModel::fit(&split_series(s, 60)?.0, &cfg))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let files = models
        .iter()
        .map(|m| m.to_json())
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let f: Vec<&dyn Forecaster> = models.iter().map(|m| m as &dyn Forecaster).collect();
    let report = run_backtest(&f, &universe, &backtest_config(60)).map_err(|e| e.to_string())?;
    let mut csv = Vec::new();
    report.write_daily_csv(&mut csv).map_err(|e| e.to_string())?;
    report.write_metrics_csv(&mut csv).map_err(|e| e.to_string())?;
    Ok((
        files,
        report.to_json().map_err(|e| e.to_string())?,
        String::from_utf8(csv).unwrap(),
    ))
}

fn criterion_9() -> Outcome {
    let first = determinism_pass()?;
    let second = determinism_pass()?;
    let model_bytes: usize = first.0.iter().map(String::len).sum();
    check(
        first == second,
        format!(
            "two train+backtest passes: {} model files ({model_bytes} bytes), JSON report ({} bytes) and CSV reports {}",
            first.0.len(),
            first.1.len(),
            if first == second { "identical" } else { "differ" }
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 normalization round-trip", criterion_1),
        ("2 constraint guarantee", criterion_2),
        ("3 feature/reconstruction inverse", criterion_3),
        ("4 gradient correctness", criterion_4),
        ("5 metric oracle equivalence", criterion_5),
        ("6 ablation direction", criterion_6),
        ("7 recommender sanity", criterion_7),
        ("8 Williams %R properties", criterion_8),
        ("9 determinism", criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.starts_with(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(format!(
                "panicked: {:?}",
                p.downcast_ref::<String>()
                    .map(String::as_str)
                    .or(p.downcast_ref::<&str>().copied())
            ))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
