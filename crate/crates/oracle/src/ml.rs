//! Model forecasts for the augmented view, served from a saved checkpoint
//! and the price history it continues.

use chrono::NaiveDate;
use marketcast_core::checkpoint::{Checkpoint, CheckpointError, SavedModel};
use marketcast_core::forecast::{forecast, ForecastError};
use marketcast_core::series::{load_csv, PriceSeries, SeriesError};
use thiserror::Error;

use crate::domain::normalize_symbol;

#[derive(Debug, Error)]
pub enum MlError {
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("symbol {0:?} is not a valid ticker")]
    Symbol(String),
}

pub struct MlLeg {
    symbol: String,
    model: SavedModel,
    closes: Vec<f64>,
    last_date: NaiveDate,
}

impl MlLeg {
    pub fn new(symbol: &str, model: SavedModel, series: &PriceSeries) -> Result<Self, MlError> {
        let symbol = normalize_symbol(symbol).ok_or_else(|| MlError::Symbol(symbol.to_string()))?;
        Ok(Self {
            symbol,
            model,
            closes: series.closes(),
            last_date: series.last().date,
        })
    }

    /// Loads the checkpoint and the CSV; the ticker defaults to the CSV
    /// file stem.
    pub fn load(checkpoint: &std::path::Path, data: &std::path::Path, symbol: Option<&str>) -> Result<Self, MlError> {
        let model = Checkpoint::load(checkpoint)?.model;
        let series = load_csv(data)?;
        let symbol = symbol.unwrap_or(series.symbol()).to_string();
        Self::new(&symbol, model, &series)
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn last_date(&self) -> NaiveDate {
        self.last_date
    }

    /// Forecast for `target_date`, `h` calendar days past the last observed
    /// close. `None` for other symbols or dates not after the history.
    pub fn value(&self, symbol: &str, target_date: NaiveDate) -> Result<Option<f64>, ForecastError> {
        if symbol != self.symbol {
            return Ok(None);
        }
        let h = (target_date - self.last_date).num_days();
        if h < 1 {
            return Ok(None);
        }
        let path = forecast(&self.model, &self.closes, h as usize)?;
        Ok(path.last().copied())
    }
}
