use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use candlecast::autoencoder::{encode, pretrain};
use candlecast::evaluation::{fit_models, run_backtest, sweep as run_sweep, BacktestConfig, Forecaster};
use candlecast::features::{build_features, FeatureVector};
use candlecast::indicators::{predicted_profit, williams_r, Recommendation, SymbolSignal};
use candlecast::market::{check_constraints, generate_universe, parse_csv, split_series, write_csv, OhlcSeries};
use candlecast::predictor::{ForecastModel, ModelConfig};
use chrono::{Datelike, Days, NaiveDate, Weekday};

use crate::config::RunConfig;
use crate::error::CliError;

const DEFAULT_OUT: &str = "out";

fn output_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

fn subdir(base: &Path, parts: &[&str]) -> Result<PathBuf, CliError> {
    let mut dir = base.to_path_buf();
    dir.extend(parts);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn read_series(path: &Path) -> Result<OhlcSeries, CliError> {
    let symbol = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| CliError::Usage(format!("{}: cannot derive a symbol from the file name", path.display())))?;
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_csv(file, symbol).map_err(|e| match CliError::from(e) {
        CliError::Io(m) => CliError::Io(format!("{}: {m}", path.display())),
        other => CliError::Data(format!("{}: {other}", path.display())),
    })
}

fn load_data(cfg: &RunConfig) -> Result<Vec<OhlcSeries>, CliError> {
    cfg.check_data_source()?;
    match cfg.data.synthetic_symbols {
        Some(n) => Ok(generate_universe(&cfg.data.synthetic, n)?),
        None => cfg.data.paths.iter().map(|p| read_series(p)).collect(),
    }
}

/// The part of `series` available for training.
fn training_part(series: &OhlcSeries, test_len: usize) -> Result<OhlcSeries, CliError> {
    if test_len == 0 {
        return Ok(series.clone());
    }
    Ok(split_series(series, test_len)?.0)
}

fn model_config(cfg: &RunConfig, seed: u64) -> Result<ModelConfig, CliError> {
    let mut m = cfg.model.clone();
    m.seed = seed;
    m.validate()?;
    Ok(m)
}

fn models_dir(cfg: &RunConfig, explicit: Option<&Path>) -> Result<PathBuf, CliError> {
    match explicit {
        Some(p) => Ok(p.to_path_buf()),
        None => Ok(output_dir(cfg)?.join("models").join(cfg.model.variant().name())),
    }
}

fn load_models(cfg: &RunConfig, dir: &Path, series: &[OhlcSeries]) -> Result<Vec<ForecastModel>, CliError> {
    let variant = cfg.model.variant();
    series
        .iter()
        .map(|s| {
            let path = dir.join(format!("{}.json", s.symbol()));
            if !path.exists() {
                return Err(CliError::Io(format!(
                    "{}: no trained model for {} (run `candlecast train` first)",
                    path.display(),
                    s.symbol()
                )));
            }
            let model = ForecastModel::load(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            if model.config.variant() != variant {
                return Err(CliError::Usage(format!(
                    "{} holds a {} model, expected {variant}",
                    path.display(),
                    model.config.variant()
                )));
            }
            if cfg.seed.is_some_and(|seed| seed != model.config.seed) {
                log::warn!("{} was trained with seed {}", path.display(), model.config.seed);
            }
            Ok(model)
        })
        .collect()
}

pub fn synth(cfg: &RunConfig, symbols: usize) -> Result<(), CliError> {
    if symbols == 0 {
        return Err(CliError::Usage("--symbols must be positive".into()));
    }
    let mut syn = cfg.data.synthetic.clone();
    if let Some(seed) = cfg.seed {
        syn.seed = seed;
    }
    let dir = output_dir(cfg)?;
    for s in generate_universe(&syn, symbols)? {
        let path = dir.join(format!("{}.csv", s.symbol()));
        let mut out = create(&path)?;
        write_csv(&s, &mut out)?;
        out.flush().map_err(|e| CliError::io(&path, e))?;
        println!("{}", path.display());
    }
    Ok(())
}

pub fn validate(files: &[PathBuf]) -> Result<(), CliError> {
    let mut failing = 0;
    for path in files {
        let series = read_series(path)?;
        let report = check_constraints(&series);
        let c = &report.counts;
        println!(
            "{}: {} bars, {} failing days (positivity {}, high_above_low {}, containment {}), {} flat bars",
            path.display(),
            series.len(),
            report.failing_days(),
            c.positivity,
            c.high_above_low,
            c.containment,
            report.degenerate.len()
        );
        for v in &report.violations {
            let names: Vec<String> = v.constraints.iter().map(ToString::to_string).collect();
            println!("  {}: {}", v.date, names.join(", "));
        }
        failing += report.failing_days();
    }
    if failing > 0 {
        return Err(CliError::Data(format!("{failing} days violate the OHLC constraints")));
    }
    Ok(())
}

pub fn features(cfg: &RunConfig, encoded: bool) -> Result<(), CliError> {
    let data = load_data(cfg)?;
    let dir = subdir(&output_dir(cfg)?, &["features"])?;
    for s in &data {
        let feats = build_features(s, &cfg.model.pipeline)?;
        let path = dir.join(format!("{}.csv", s.symbol()));
        let mut out = create(&path)?;
        writeln!(out, "date,{}", FeatureVector::NAMES.join(","))?;
        for (bar, f) in s.bars().iter().zip(&feats) {
            let row: Vec<String> = f.to_array().iter().map(f64::to_string).collect();
            writeln!(out, "{},{}", bar.date, row.join(","))?;
        }
        out.flush()?;
        println!("{}", path.display());

        if encoded {
            let train_len = training_part(s, cfg.test_len.min(s.len().saturating_sub(1)))?.len();
            let mut ae = cfg.model.autoencoder.clone();
            ae.seed = cfg.seed.unwrap_or(ae.seed);
            let params = pretrain(&feats[..train_len], &ae)?.params;
            let path = dir.join(format!("{}_encoded.csv", s.symbol()));
            let mut out = create(&path)?;
            let header: Vec<String> = (1..=ae.hidden).map(|k| format!("z{k}")).collect();
            writeln!(out, "date,{}", header.join(","))?;
            for (bar, f) in s.bars().iter().zip(&feats) {
                let row: Vec<String> = encode(&params, f).iter().map(f64::to_string).collect();
                writeln!(out, "{},{}", bar.date, row.join(","))?;
            }
            out.flush()?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

pub fn train(cfg: &RunConfig) -> Result<(), CliError> {
    let seed = cfg.require_seed()?;
    let mcfg = model_config(cfg, seed)?;
    let data = load_data(cfg)?;
    let parts: Vec<OhlcSeries> = data
        .iter()
        .map(|s| training_part(s, cfg.test_len))
        .collect::<Result<_, _>>()?;
    let models = fit_models(&parts, &mcfg, cfg.jobs)?;
    let dir = subdir(&output_dir(cfg)?, &["models", mcfg.variant().name()])?;
    for (s, m) in data.iter().zip(&models) {
        let path = dir.join(format!("{}.json", s.symbol()));
        m.save(&path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let loss_path = dir.join(format!("{}_loss.csv", s.symbol()));
        let mut out = create(&loss_path)?;
        writeln!(out, "epoch,loss")?;
        for (e, l) in m.loss_history.iter().enumerate() {
            writeln!(out, "{},{l}", e + 1)?;
        }
        out.flush()?;
        println!(
            "{} {}: {} epochs, final loss {}, {}",
            mcfg.variant(),
            s.symbol(),
            m.loss_history.len(),
            m.loss_history.last().map_or("n/a".into(), |l| l.to_string()),
            path.display()
        );
    }
    Ok(())
}

pub fn backtest(cfg: &RunConfig, models: Option<&Path>) -> Result<(), CliError> {
    cfg.require_seed()?;
    let data = load_data(cfg)?;
    let dir = models_dir(cfg, models)?;
    let models = load_models(cfg, &dir, &data)?;
    let forecasters: Vec<&dyn Forecaster> = models.iter().map(|m| m as &dyn Forecaster).collect();
    let bcfg = BacktestConfig {
        test_len: cfg.test_len,
        indicators: cfg.indicators,
        pipeline: models[0].config.pipeline,
    };
    let report = run_backtest(&forecasters, &data, &bcfg)?;
    let out = subdir(&output_dir(cfg)?, &["backtest", cfg.model.variant().name()])?;
    let mut json = report.to_json()?;
    json.push('\n');
    write_text(&out.join("report.json"), &json)?;
    report.write_daily_csv(create(&out.join("days.csv"))?)?;
    report.write_metrics_csv(create(&out.join("metrics.csv"))?)?;

    println!(
        "{}: {} days scored ({} warm-up skipped), constraint failures {}, cumulative profit of top picks {:.4}",
        cfg.model.variant(),
        report.days.len(),
        report.warmup_skipped,
        report.constraint_failures,
        report.total_actual_profit
    );
    for s in &report.stocks {
        let m = &s.metrics;
        println!(
            "  {}: rmse {:.4} mae {:.4} mape {:.5} r2 {:.4} failures {}",
            s.symbol, m.rmse, m.mae, m.mape, m.r2, s.constraint_failures
        );
    }
    println!(
        "  runtime {:.2}s, reports in {}",
        report.runtime.as_secs_f64(),
        out.display()
    );
    Ok(())
}

fn next_weekday(date: NaiveDate) -> NaiveDate {
    let mut d = date + Days::new(1);
    while matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
        d = d + Days::new(1);
    }
    d
}

pub fn recommend(cfg: &RunConfig, models: Option<&Path>, as_of: Option<NaiveDate>) -> Result<(), CliError> {
    cfg.indicators.validate()?;
    let data = load_data(cfg)?;
    let dir = models_dir(cfg, models)?;
    let models = load_models(cfg, &dir, &data)?;
    let d = cfg.indicators.lookback;

    let mut signals = Vec::with_capacity(data.len());
    let mut next_date = None;
    for (s, m) in data.iter().zip(&models) {
        let bars = s.bars();
        let last = match as_of {
            Some(date) => bars.iter().rposition(|b| b.date <= date),
            None => bars.len().checked_sub(1),
        }
        .ok_or_else(|| CliError::Usage(format!("{} has no data on or before the as-of date", s.symbol())))?;
        let day = last + 1;
        let w = m.window();
        if day < w || day < d - 1 {
            return Err(CliError::Usage(format!(
                "{} needs {} days of history before the forecast day, has {day}",
                s.symbol(),
                w.max(d - 1)
            )));
        }
        let feats = build_features(s, &m.config.pipeline)?;
        let pred = m.predict_bar(&feats[day - w..day])?;
        let r = williams_r(&bars[day + 1 - d..day], &pred, &cfg.indicators)?;
        signals.push(SymbolSignal {
            symbol: s.symbol().to_string(),
            predicted: pred,
            predicted_profit: predicted_profit(pred.high, bars[last].low),
            williams_r: r.value,
            williams_r_degenerate: r.degenerate,
        });
        let date = bars.get(day).map_or_else(|| next_weekday(bars[last].date), |b| b.date);
        next_date = Some(next_date.map_or(date, |n: NaiveDate| n.max(date)));
    }
    let date = next_date.expect("at least one series");
    let rec = Recommendation::from_signals(date, signals, cfg.top_k, &cfg.indicators);

    println!("recommendation for {date}");
    for (rank, r) in rec.top_profit.iter().enumerate() {
        println!(
            "  {}. {} predicted profit {:.4}",
            rank + 1,
            r.symbol,
            r.predicted_profit
        );
    }
    if rec.buy_signals.is_empty() {
        println!("  no %R buy signals at threshold {}", cfg.indicators.threshold);
    }
    for b in &rec.buy_signals {
        println!("  buy signal: {} %R {:.2}", b.symbol, b.williams_r);
    }
    let out = output_dir(cfg)?;
    let mut json = rec.to_json()?;
    json.push('\n');
    write_text(&out.join("recommendation.json"), &json)?;
    rec.write_csv(create(&out.join("recommendation.csv"))?)?;
    Ok(())
}

pub fn sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let seed = cfg.require_seed()?;
    let mcfg = model_config(cfg, seed)?;
    let data = load_data(cfg)?;
    let parts: Vec<OhlcSeries> = data
        .iter()
        .map(|s| training_part(s, cfg.test_len))
        .collect::<Result<_, _>>()?;
    let table = run_sweep(cfg.sweep.parameter, &cfg.sweep.values, &parts, &mcfg, cfg.jobs)?;
    let path = output_dir(cfg)?.join(format!("sweep_{}.csv", table.parameter));
    table.write_csv(create(&path)?)?;
    println!(
        "{:>8} {:>12} {:>12} {:>12}",
        table.parameter.name(),
        "rmse",
        "mae",
        "mape"
    );
    for r in &table.rows {
        println!("{:>8} {:>12.6} {:>12.6} {:>12.6}", r.value, r.rmse, r.mae, r.mape);
    }
    println!("{}", path.display());
    Ok(())
}
