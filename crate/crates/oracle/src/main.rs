use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::Parser;
use marketcast_oracle::clock::SystemClock;
use marketcast_oracle::ml::MlLeg;
use marketcast_oracle::ranking::StreakConfig;
use marketcast_oracle::{router, OracleService, ServiceConfig};

#[derive(Parser)]
#[command(name = "oracle-server", version, about = "Serve the prediction leaderboard API")]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Event log file; created if missing.
    #[arg(long, default_value = "oracle-events.ndjson")]
    log: PathBuf,
    /// Bearer token accepted for resolutions.
    #[arg(long, env = "ORACLE_ADMIN_TOKEN")]
    admin_token: String,
    /// Model checkpoint used for the forecast endpoint.
    #[arg(long, requires = "data")]
    checkpoint: Option<PathBuf>,
    /// Price CSV the checkpoint forecasts from.
    #[arg(long, requires = "checkpoint")]
    data: Option<PathBuf>,
    /// Ticker served by the model; defaults to the CSV file stem.
    #[arg(long)]
    symbol: Option<String>,
    #[arg(long, default_value_t = 3)]
    min_resolved: usize,
    #[arg(long, default_value_t = 0.1)]
    top_fraction: f64,
    #[arg(long, default_value_t = 3)]
    min_consecutive: usize,
    #[arg(long, default_value_t = 0.5)]
    weight: f64,
}

#[tokio::main]
async fn main() -> Result<()> {
    let args = Args::parse();
    let config = ServiceConfig {
        admin_token: args.admin_token,
        min_resolved: args.min_resolved,
        streak: StreakConfig {
            top_fraction: args.top_fraction,
            min_consecutive: args.min_consecutive,
        },
        default_weight: args.weight,
    };
    let mut service = OracleService::open(&args.log, config, Arc::new(SystemClock))
        .with_context(|| format!("opening {}", args.log.display()))?;
    match (&args.checkpoint, &args.data) {
        (Some(ckpt), Some(data)) => {
            let ml = MlLeg::load(ckpt, data, args.symbol.as_deref())
                .with_context(|| format!("loading model {}", ckpt.display()))?;
            eprintln!("model forecasts for {} from {}", ml.symbol(), ml.last_date());
            service = service.with_ml(ml);
        }
        _ => eprintln!("no checkpoint configured; forecasts use human predictions only"),
    }
    eprintln!("replayed {} events from {}", service.event_count(), args.log.display());

    let listener = tokio::net::TcpListener::bind(args.addr).await?;
    eprintln!("listening on {}", args.addr);
    axum::serve(listener, router(Arc::new(service)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
