//! `candlecast`: generate, validate, train, backtest and recommend from the
//! command line.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use candlecast::evaluation::SweepParameter;
use candlecast::predictor::Variant;
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;

/// Environment variable naming the default output directory.
pub const OUTPUT_ENV: &str = "CANDLECAST_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "candlecast",
    version,
    about = "Next-day OHLC forecasting and stock recommendation"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, global = true, env = OUTPUT_ENV)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-symbol work.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Repeat for more log output.
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

/// Data selection shared by commands that read prices.
#[derive(Debug, Args)]
struct DataArgs {
    /// OHLC CSV files (symbol = file stem).
    files: Vec<PathBuf>,
    /// Use N synthetic symbols instead of files.
    #[arg(long, value_name = "N")]
    synthetic: Option<usize>,
    /// Trailing days held out for testing.
    #[arg(long)]
    test_len: Option<usize>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write seeded synthetic OHLC series as CSV.
    Synth {
        #[arg(long, default_value_t = 3)]
        symbols: usize,
        #[arg(long)]
        days: Option<usize>,
    },
    /// Check OHLC files against the price constraints.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Write normalized (and optionally encoded) feature CSVs.
    Features {
        #[command(flatten)]
        data: DataArgs,
        /// Also pretrain the autoencoder and write 4-d codes.
        #[arg(long)]
        encoded: bool,
    },
    /// Train one model per symbol on all but the test days.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Walk forward through the test days with trained models.
    Backtest {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        variant: Option<Variant>,
        /// Model directory (default: <out>/models/<variant>).
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Rank symbols for the day after `--as-of`.
    Recommend {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        variant: Option<Variant>,
        #[arg(long)]
        models: Option<PathBuf>,
        /// Last known day (default: last day in the data).
        #[arg(long)]
        as_of: Option<NaiveDate>,
        #[arg(long)]
        top: Option<usize>,
        /// Buy threshold on the %R magnitude.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Score a hyperparameter over a list of values on a validation split.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        parameter: Option<SweepParameter>,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<usize>>,
    },
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn base_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if let Some(jobs) = common.jobs {
        cfg.jobs = jobs;
    }
    if common.out.is_some() {
        cfg.output_dir = common.out.clone();
    }
    if cfg.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    Ok(cfg)
}

fn apply_data(cfg: &mut RunConfig, data: &DataArgs) {
    if !data.files.is_empty() {
        cfg.data.paths = data.files.clone();
        cfg.data.synthetic_symbols = None;
    }
    if let Some(n) = data.synthetic {
        cfg.data.synthetic_symbols = Some(n);
        if data.files.is_empty() {
            cfg.data.paths.clear();
        }
    }
    if let Some(t) = data.test_len {
        cfg.test_len = t;
    }
}

fn apply_model(cfg: &mut RunConfig, model: &ModelArgs) {
    if let Some(v) = model.variant {
        cfg.model = cfg.model.clone().with_variant(v);
    }
    if let Some(e) = model.epochs {
        cfg.model.training.epochs = e;
    }
    if let Some(b) = model.batch_size {
        cfg.model.training.batch_size = Some(b);
    }
    if let Some(w) = model.window {
        cfg.model.pipeline.window = w;
    }
}

fn apply_variant(cfg: &mut RunConfig, variant: Option<Variant>) {
    if let Some(v) = variant {
        cfg.model = cfg.model.clone().with_variant(v);
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = base_config(&cli.common)?;
    match cli.command {
        Command::Synth { symbols, days } => {
            if let Some(d) = days {
                cfg.data.synthetic.n_days = d;
            }
            commands::synth(&cfg, symbols)
        }
        Command::Validate { files } => commands::validate(&files),
        Command::Features { data, encoded } => {
            apply_data(&mut cfg, &data);
            commands::features(&cfg, encoded)
        }
        Command::Train { data, model } => {
            apply_data(&mut cfg, &data);
            apply_model(&mut cfg, &model);
            commands::train(&cfg)
        }
        Command::Backtest { data, variant, models } => {
            apply_data(&mut cfg, &data);
            apply_variant(&mut cfg, variant);
            commands::backtest(&cfg, models.as_deref())
        }
        Command::Recommend {
            data,
            variant,
            models,
            as_of,
            top,
            threshold,
        } => {
            apply_data(&mut cfg, &data);
            apply_variant(&mut cfg, variant);
            if let Some(k) = top {
                cfg.top_k = k;
            }
            if let Some(t) = threshold {
                cfg.indicators.threshold = t;
            }
            commands::recommend(&cfg, models.as_deref(), as_of)
        }
        Command::Sweep {
            data,
            model,
            parameter,
            values,
        } => {
            apply_data(&mut cfg, &data);
            apply_model(&mut cfg, &model);
            if let Some(p) = parameter {
                cfg.sweep.parameter = p;
            }
            if let Some(v) = values {
                cfg.sweep.values = v;
            }
            commands::sweep(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.common.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
