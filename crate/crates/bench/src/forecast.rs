//! Multi-step forecasts from a checkpoint or a freshly trained model.

use std::path::Path;

use marketcast_core::checkpoint::{Checkpoint, CheckpointError, SavedModel};
use marketcast_core::forecast::{self, ForecastError};
use marketcast_core::series::PriceSeries;
use marketcast_core::zoo::ZooName;
use thiserror::Error;

use crate::config::BenchConfig;
use crate::pipeline::{run_benchmark, BenchError};

#[derive(Debug, Error)]
pub enum ForecastCmdError {
    #[error("forecast horizon must be at least 1")]
    ZeroHorizon,
    #[error("no checkpoint at {0} and training was disabled")]
    MissingCheckpoint(String),
    #[error("--no-train requires --checkpoint")]
    NoCheckpointGiven,
    #[error("checkpoint holds {found}, not {wanted}")]
    WrongModel { wanted: ZooName, found: ZooName },
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
}

pub struct ForecastRequest<'a> {
    pub model: ZooName,
    pub horizon: usize,
    pub checkpoint: Option<&'a Path>,
    pub no_train: bool,
}

/// Loads the checkpoint when it exists, otherwise trains `model` with the
/// benchmark pipeline (and saves the result to the checkpoint path if one
/// was given).
pub fn obtain_model(
    series: &PriceSeries,
    config: &BenchConfig,
    req: &ForecastRequest<'_>,
) -> Result<SavedModel, ForecastCmdError> {
    match req.checkpoint {
        Some(path) if path.exists() => {
            let saved = Checkpoint::load(path)?.model;
            if saved.name() != req.model {
                return Err(ForecastCmdError::WrongModel {
                    wanted: req.model,
                    found: saved.name(),
                });
            }
            return Ok(saved);
        }
        Some(path) if req.no_train => {
            return Err(ForecastCmdError::MissingCheckpoint(path.display().to_string()))
        }
        None if req.no_train => return Err(ForecastCmdError::NoCheckpointGiven),
        _ => {}
    }
    let cfg = BenchConfig {
        models: vec![req.model],
        ..config.clone()
    };
    let mut report = run_benchmark(series, &cfg)?;
    let saved = report.outcomes.remove(0).result?.saved;
    if let Some(path) = req.checkpoint {
        Checkpoint::new(saved.clone()).save(path)?;
    }
    Ok(saved)
}

/// `horizon` prices following the last observation of `series`.
pub fn run_forecast(
    series: &PriceSeries,
    config: &BenchConfig,
    req: &ForecastRequest<'_>,
) -> Result<Vec<f64>, ForecastCmdError> {
    if req.horizon == 0 {
        return Err(ForecastCmdError::ZeroHorizon);
    }
    let saved = obtain_model(series, config, req)?;
    Ok(forecast::forecast(&saved, &series.closes(), req.horizon)?)
}
