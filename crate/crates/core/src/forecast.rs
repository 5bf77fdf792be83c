//! Multi-step forecasts in price units from a saved model.

use thiserror::Error;

use crate::arima::ArimaError;
use crate::checkpoint::SavedModel;
use crate::neural::{NetworkModel, NeuralError};
use crate::series::ScalerParams;

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("forecast horizon must be at least 1")]
    ZeroHorizon,
    #[error("need {required} past prices, got {actual}")]
    InsufficientHistory { required: usize, actual: usize },
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Arima(#[from] ArimaError),
}

/// Rolls a one-step network forward `horizon` steps: each prediction is
/// appended to the window that produces the next one.
pub fn roll_forward(
    network: &NetworkModel,
    scaler: &ScalerParams,
    history: &[f64],
    time_step: usize,
    horizon: usize,
) -> Result<Vec<f64>, ForecastError> {
    if horizon == 0 {
        return Err(ForecastError::ZeroHorizon);
    }
    if history.len() < time_step {
        return Err(ForecastError::InsufficientHistory {
            required: time_step,
            actual: history.len(),
        });
    }
    let mut window: Vec<f64> = history[history.len() - time_step..]
        .iter()
        .map(|&v| scaler.forward(v))
        .collect();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let next = network.predict(std::slice::from_ref(&window))?[0];
        out.push(scaler.inverse(next));
        window.remove(0);
        window.push(next);
    }
    Ok(out)
}

/// Forecasts `horizon` prices past the end of `history`.
pub fn forecast(model: &SavedModel, history: &[f64], horizon: usize) -> Result<Vec<f64>, ForecastError> {
    if horizon == 0 {
        return Err(ForecastError::ZeroHorizon);
    }
    match model {
        SavedModel::Neural {
            network,
            scaler,
            time_step,
            ..
        } => roll_forward(network, scaler, history, *time_step, horizon),
        SavedModel::Arima { model } => Ok(model.forecast(history, horizon)?),
    }
}
