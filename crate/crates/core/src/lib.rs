//! Forecasting workbench core: price-series pipeline, ARIMA estimation,
//! a small recurrent/convolutional network toolkit and the model zoo built
//! on top of it.

pub mod arima;
pub mod checkpoint;
pub mod forecast;
pub mod metrics;
pub mod neural;
pub mod series;
pub mod synthetic;
pub mod zoo;
