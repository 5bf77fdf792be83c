//! Point-forecast error metrics, reported in the units of the inputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("metric inputs are empty")]
    Empty,
    #[error("length mismatch: {predicted} predictions vs {actual} actuals")]
    LengthMismatch { predicted: usize, actual: usize },
}

fn check(predicted: &[f64], actual: &[f64]) -> Result<(), MetricError> {
    if predicted.len() != actual.len() {
        return Err(MetricError::LengthMismatch {
            predicted: predicted.len(),
            actual: actual.len(),
        });
    }
    if predicted.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae(predicted: &[f64], actual: &[f64]) -> Result<f64, MetricError> {
    check(predicted, actual)?;
    let sum: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a).abs())
        .sum();
    Ok(sum / predicted.len() as f64)
}

/// Mean squared error.
pub fn mse(predicted: &[f64], actual: &[f64]) -> Result<f64, MetricError> {
    check(predicted, actual)?;
    let sum: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok(sum / predicted.len() as f64)
}

/// Root mean squared error.
pub fn rmse(predicted: &[f64], actual: &[f64]) -> Result<f64, MetricError> {
    mse(predicted, actual).map(f64::sqrt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
}

impl MetricReport {
    pub fn compute(predicted: &[f64], actual: &[f64]) -> Result<Self, MetricError> {
        let mse = mse(predicted, actual)?;
        Ok(Self {
            mae: mae(predicted, actual)?,
            mse,
            rmse: mse.sqrt(),
        })
    }
}

/// MAE of the last-value baseline: each `actual[i]` is predicted by the value
/// before it, with `previous` standing in for the value before `actual[0]`.
pub fn naive_last_value_mae(previous: f64, actual: &[f64]) -> Result<f64, MetricError> {
    let mut preds = Vec::with_capacity(actual.len());
    let mut last = previous;
    for &a in actual {
        preds.push(last);
        last = a;
    }
    mae(&preds, actual)
}
