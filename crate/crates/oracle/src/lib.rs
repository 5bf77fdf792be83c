//! Backend for human price predictions: registration, submissions,
//! resolution against realised prices, leaderboards, superforecaster
//! detection and a forecast blending a trained model with the crowd.
//!
//! State lives in an append-only event log and is rebuilt on start by
//! replaying it.

pub mod augment;
pub mod clock;
pub mod domain;
pub mod error;
pub mod http;
pub mod ml;
mod price;
pub mod ranking;
pub mod service;
pub mod state;
pub mod store;

pub use error::{OracleError, Result};
pub use http::router;
pub use service::{OracleService, ServiceConfig};
