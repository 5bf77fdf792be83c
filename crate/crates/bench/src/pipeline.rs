//! split -> scale -> window -> train -> predict -> inverse-scale -> metrics.

use std::time::Instant;

use chrono::NaiveDate;
use marketcast_core::arima::{self, ArimaError};
use marketcast_core::checkpoint::SavedModel;
use marketcast_core::metrics::{naive_last_value_mae, MetricError, MetricReport};
use marketcast_core::neural::{self, NeuralError, TrainConfig, TrainHistory};
use marketcast_core::series::{fit_minmax_values, make_windows, PriceSeries, ScalerParams, SeriesError};
use marketcast_core::zoo::{ZooError, ZooName};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{BenchConfig, ConfigError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Zoo(#[from] ZooError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Arima(#[from] ArimaError),
    #[error("train split of {train} points is too short for time_step {time_step}")]
    TrainTooShort { train: usize, time_step: usize },
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("writing csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionRow {
    pub date: NaiveDate,
    pub split: Split,
    pub actual: f64,
    pub predicted: f64,
}

/// Everything one model produced during a run.
#[derive(Debug, Clone)]
pub struct ModelRun {
    pub name: ZooName,
    pub train: MetricReport,
    pub test: MetricReport,
    pub train_seconds: f64,
    pub predictions: Vec<PredictionRow>,
    /// Per-epoch losses for neural models.
    pub history: Option<TrainHistory>,
    /// Grid cells for ARIMA.
    pub grid: Option<Vec<arima::GridEntry>>,
    pub saved: SavedModel,
}

#[derive(Debug)]
pub struct ModelOutcome {
    pub name: ZooName,
    pub result: Result<ModelRun, BenchError>,
}

#[derive(Debug)]
pub struct RunReport {
    /// One outcome per selected model, in report order.
    pub outcomes: Vec<ModelOutcome>,
    /// Test MAE of repeating the previous actual price.
    pub naive_test_mae: f64,
    pub train_len: usize,
    pub test_len: usize,
}

impl RunReport {
    pub fn run(&self, name: ZooName) -> Option<&ModelRun> {
        self.outcomes
            .iter()
            .find(|o| o.name == name)
            .and_then(|o| o.result.as_ref().ok())
    }
}

/// Series data shared by every model in a run.
struct Prepared {
    dates: Vec<NaiveDate>,
    prices: Vec<f64>,
    train_len: usize,
}

impl Prepared {
    fn new(series: &PriceSeries, config: &BenchConfig) -> Result<Self, BenchError> {
        let (train, _) = series.chrono_split(config.train_fraction)?;
        let train_len = train.len();
        if train_len <= config.time_step {
            return Err(BenchError::TrainTooShort {
                train: train_len,
                time_step: config.time_step,
            });
        }
        Ok(Self {
            dates: series.dates(),
            prices: series.closes(),
            train_len,
        })
    }

    /// Scaler fitted on the train split only, and every price scaled by it.
    fn scaled(&self) -> Result<(ScalerParams, Vec<f64>), BenchError> {
        let scaler = fit_minmax_values(&self.prices[..self.train_len])?;
        let scaled = self.prices.iter().map(|&v| scaler.forward(v)).collect();
        Ok((scaler, scaled))
    }

    /// Lag windows ending just before each test point; early windows reach
    /// back into the train split.
    fn test_windows(&self, scaled: &[f64], time_step: usize) -> Vec<Vec<f64>> {
        (self.train_len..self.prices.len())
            .map(|i| scaled[i - time_step..i].to_vec())
            .collect()
    }

    fn rows(&self, time_step: usize, train_pred: &[f64], test_pred: &[f64]) -> Vec<PredictionRow> {
        let train = (time_step..self.train_len).zip(train_pred).map(|(i, &p)| (i, Split::Train, p));
        let test = (self.train_len..self.prices.len()).zip(test_pred).map(|(i, &p)| (i, Split::Test, p));
        train
            .chain(test)
            .map(|(i, split, predicted)| PredictionRow {
                date: self.dates[i],
                split,
                actual: self.prices[i],
                predicted,
            })
            .collect()
    }

    fn finish(
        &self,
        time_step: usize,
        train_pred: Vec<f64>,
        test_pred: Vec<f64>,
        train_seconds: f64,
    ) -> Result<(MetricReport, MetricReport, Vec<PredictionRow>, f64), BenchError> {
        let train = MetricReport::compute(&train_pred, &self.prices[time_step..self.train_len])?;
        let test = MetricReport::compute(&test_pred, &self.prices[self.train_len..])?;
        Ok((train, test, self.rows(time_step, &train_pred, &test_pred), train_seconds))
    }
}

pub fn train_config(config: &BenchConfig) -> TrainConfig {
    TrainConfig {
        epochs: config.epochs,
        batch_size: config.batch_size,
        learning_rate: config.learning_rate,
        shuffle: config.shuffle,
        ..TrainConfig::default()
    }
}

fn run_neural(name: ZooName, data: &Prepared, config: &BenchConfig) -> Result<ModelRun, BenchError> {
    let ts = config.time_step;
    let (scaler, scaled) = data.scaled()?;
    let windows = make_windows(&scaled[..data.train_len], ts)?;
    let mut network = name.build(ts, config.seed)?;
    let tc = train_config(config);

    let start = Instant::now();
    let history = neural::fit(&mut network, windows.inputs(), windows.targets(), &tc, config.seed)?;
    let train_seconds = start.elapsed().as_secs_f64();

    let inverse = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(|u| scaler.inverse(u)).collect() };
    let train_pred = inverse(network.predict(windows.inputs())?);
    let test_pred = inverse(network.predict(&data.test_windows(&scaled, ts))?);
    let (train, test, predictions, train_seconds) =
        data.finish(ts, train_pred, test_pred, train_seconds)?;
    Ok(ModelRun {
        name,
        train,
        test,
        train_seconds,
        predictions,
        history: Some(history),
        grid: None,
        saved: SavedModel::Neural {
            name,
            time_step: ts,
            seed: config.seed,
            network,
            train_config: tc,
            scaler,
        },
    })
}

/// ARIMA works on raw prices. The order is chosen by one-step MAE over the
/// test split and the reported time covers the whole grid.
fn run_arima(data: &Prepared, config: &BenchConfig) -> Result<ModelRun, BenchError> {
    let ts = config.time_step;
    let train = &data.prices[..data.train_len];
    let test = &data.prices[data.train_len..];
    let grid = arima::grid_search(train, test, &config.arima.p_values, &config.arima.q_values)?;
    let model = grid.best_model().clone();
    let train_pred = model.fitted_values(train)[ts..].to_vec();
    let test_pred = model.predict_one_step(train, test)?;
    let (train_m, test_m, predictions, train_seconds) =
        data.finish(ts, train_pred, test_pred, grid.total_train_seconds())?;
    Ok(ModelRun {
        name: ZooName::Arima,
        train: train_m,
        test: test_m,
        train_seconds,
        predictions,
        history: None,
        grid: Some(grid.entries),
        saved: SavedModel::Arima { model },
    })
}

/// Trains and evaluates every selected model on `series`. A model that
/// fails is reported as such without stopping the others.
pub fn run_benchmark(series: &PriceSeries, config: &BenchConfig) -> Result<RunReport, BenchError> {
    config.validate()?;
    let data = Prepared::new(series, config)?;
    let naive_test_mae = naive_last_value_mae(
        data.prices[data.train_len - 1],
        &data.prices[data.train_len..],
    )?;
    let outcomes = config
        .models
        .par_iter()
        .map(|&name| ModelOutcome {
            name,
            result: if name.is_neural() {
                run_neural(name, &data, config)
            } else {
                run_arima(&data, config)
            },
        })
        .collect();
    Ok(RunReport {
        outcomes,
        naive_test_mae,
        train_len: data.train_len,
        test_len: data.prices.len() - data.train_len,
    })
}
