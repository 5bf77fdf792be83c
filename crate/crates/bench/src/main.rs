use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Parser, Subcommand};
use marketcast_bench::config::parse_models;
use marketcast_bench::forecast::{run_forecast, ForecastRequest};
use marketcast_bench::{export, run_benchmark, BenchConfig};
use marketcast_core::series::{load_csv, PriceSeries};
use marketcast_core::synthetic::{sine_series, write_csv, SineParams};
use marketcast_core::zoo::ZooName;

#[derive(Parser)]
#[command(name = "bench", version, about = "Train and score the forecasting model zoo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the selected models and write scores, predictions and checkpoints.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated model names (BiLSTM, ARIMA, CNN_LSTM, GRU, LSTM_GRU).
        #[arg(long)]
        models: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Print future prices from one model.
    Forecast {
        #[arg(long)]
        model: ZooName,
        #[arg(long)]
        horizon: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Load this checkpoint if it exists; after fresh training, save to it.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Fail instead of training when the checkpoint is missing.
        #[arg(long)]
        no_train: bool,
    },
    /// Write a synthetic sine-wave price CSV.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 500)]
        len: usize,
        #[arg(long, default_value = "2020-01-01")]
        start: NaiveDate,
        #[arg(long, default_value_t = 100.0)]
        level: f64,
        #[arg(long, default_value_t = 10.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 25.0)]
        period: f64,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<BenchConfig> {
    match path {
        Some(p) => BenchConfig::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(BenchConfig::default()),
    }
}

fn load_series(config: &BenchConfig) -> Result<PriceSeries> {
    let Some(path) = &config.data_path else {
        bail!("no data file: set data_path in the config or pass --data");
    };
    load_csv(path).with_context(|| format!("loading {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            models,
            seed,
            out,
            data,
            epochs,
        } => {
            let mut cfg = load_config(config.as_ref())?;
            if let Some(m) = models {
                cfg.models = parse_models(&m)?;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            if let Some(d) = data {
                cfg.data_path = Some(d);
            }
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            cfg.validate()?;
            let series = load_series(&cfg)?;
            let report = run_benchmark(&series, &cfg)?;
            export(&report, &cfg.output_dir)?;
            println!(
                "{:<9} {:>12} {:>12} {:>12} {:>12} {:>9}",
                "model", "train_rmse", "test_rmse", "train_mae", "test_mae", "seconds"
            );
            let mut failed = 0;
            for o in &report.outcomes {
                match &o.result {
                    Ok(r) => println!(
                        "{:<9} {:>12.4} {:>12.4} {:>12.4} {:>12.4} {:>9.2}",
                        o.name, r.train.rmse, r.test.rmse, r.train.mae, r.test.mae, r.train_seconds
                    ),
                    Err(e) => {
                        failed += 1;
                        eprintln!("{}: failed: {e}", o.name);
                    }
                }
            }
            println!("naive last-value test MAE: {:.4}", report.naive_test_mae);
            println!("wrote {}", cfg.output_dir.display());
            if failed == report.outcomes.len() {
                bail!("every model failed");
            }
            Ok(())
        }
        Command::Forecast {
            model,
            horizon,
            config,
            data,
            checkpoint,
            no_train,
        } => {
            if horizon == 0 {
                bail!("--horizon must be at least 1");
            }
            let mut cfg = load_config(config.as_ref())?;
            if let Some(d) = data {
                cfg.data_path = Some(d);
            }
            let series = load_series(&cfg)?;
            let req = ForecastRequest {
                model,
                horizon,
                checkpoint: checkpoint.as_deref(),
                no_train,
            };
            let values = run_forecast(&series, &cfg, &req)?;
            let last = series.last().date;
            for (i, v) in values.iter().enumerate() {
                println!("{}\t{v}", last + chrono::Days::new(i as u64 + 1));
            }
            Ok(())
        }
        Command::Synth {
            out,
            len,
            start,
            level,
            amplitude,
            period,
        } => {
            let params = SineParams {
                level,
                amplitude,
                period,
            };
            let series = sine_series("SINE", len, start, params)?;
            let file = std::fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_csv(&series, file)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
