//! Users, prediction records and the events that change them.

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

pub const MAX_HANDLE_LEN: usize = 64;
pub const MAX_SYMBOL_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct User {
    pub id: String,
    pub handle: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Open,
    Resolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub user_id: String,
    pub symbol: String,
    pub target_date: NaiveDate,
    #[serde(with = "crate::price")]
    pub predicted_price: f64,
    pub submitted_at: DateTime<Utc>,
    pub status: Status,
    #[serde(with = "crate::price::option")]
    pub actual_price: Option<f64>,
    #[serde(with = "crate::price::option")]
    pub abs_error: Option<f64>,
    #[serde(with = "crate::price::option")]
    pub pct_error: Option<f64>,
}

impl PredictionRecord {
    pub(crate) fn resolve(&mut self, actual: f64) {
        let abs = (self.predicted_price - actual).abs();
        self.status = Status::Resolved;
        self.actual_price = Some(actual);
        self.abs_error = Some(abs);
        self.pct_error = Some(abs / actual);
    }
}

/// One line of the event log. State is the left fold of these over
/// [`crate::state::State::apply`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    UserCreated {
        id: String,
        handle: String,
        /// Hex SHA-256 of the bearer token; the token itself is never stored.
        token_hash: String,
        at: DateTime<Utc>,
    },
    PredictionSubmitted {
        id: String,
        user_id: String,
        symbol: String,
        target_date: NaiveDate,
        predicted_price: f64,
        at: DateTime<Utc>,
    },
    PredictionResolved {
        symbol: String,
        date: NaiveDate,
        actual_price: f64,
        at: DateTime<Utc>,
    },
}

/// Upper-cased, trimmed ticker.
pub fn normalize_symbol(raw: &str) -> Option<String> {
    let s = raw.trim().to_uppercase();
    let ok = !s.is_empty()
        && s.len() <= MAX_SYMBOL_LEN
        && s.chars().all(|c| c.is_ascii_alphanumeric() || "._-^".contains(c));
    ok.then_some(s)
}
