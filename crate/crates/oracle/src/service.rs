//! Validated operations over the event-sourced state.
//!
//! Reads take a shared lock and see one consistent snapshot. Writes take
//! the exclusive lock, validate, append to the log and only then apply, so
//! the log is the single writer's record of every accepted change.

use std::path::Path;
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use chrono::{DateTime, NaiveDate, Utc};
use rand::RngCore;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::augment::{augmented_forecast, AugmentedForecast};
use crate::clock::Clock;
use crate::domain::{normalize_symbol, Event, PredictionRecord, User, MAX_HANDLE_LEN};
use crate::error::{OracleError, Result};
use crate::ml::MlLeg;
use crate::ranking::{compute_leaderboard, weekly_superforecasters, LeaderboardEntry, StreakConfig, Window};
use crate::state::State;
use crate::store::EventLog;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub admin_token: String,
    /// Default minimum resolved predictions for leaderboard entry, also
    /// used for the weekly superforecaster boards.
    pub min_resolved: usize,
    pub streak: StreakConfig,
    pub default_weight: f64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            admin_token: String::new(),
            min_resolved: 3,
            streak: StreakConfig::default(),
            default_weight: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedUser {
    pub handle: String,
    #[serde(flatten)]
    pub entry: LeaderboardEntry,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuperforecasterView {
    pub user_id: String,
    pub handle: String,
    pub consecutive_top_windows: usize,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Registration {
    #[serde(flatten)]
    pub user: User,
    /// Bearer token for this user's writes. Shown once.
    pub token: String,
}

struct Inner {
    state: State,
    log: EventLog,
}

pub struct OracleService {
    inner: RwLock<Inner>,
    clock: Arc<dyn Clock>,
    config: ServiceConfig,
    ml: Option<MlLeg>,
}

pub fn hash_token(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

impl OracleService {
    /// Opens the log at `path` and rebuilds state by replaying it.
    pub fn open(path: impl AsRef<Path>, config: ServiceConfig, clock: Arc<dyn Clock>) -> Result<Self> {
        let (log, events) = EventLog::open(path)?;
        let mut state = State::default();
        for (i, e) in events.iter().enumerate() {
            state.apply(e).map_err(|message| OracleError::Corrupt { line: i + 1, message })?;
        }
        Ok(Self {
            inner: RwLock::new(Inner { state, log }),
            clock,
            config,
            ml: None,
        })
    }

    pub fn with_ml(mut self, ml: MlLeg) -> Self {
        self.ml = Some(ml);
        self
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn read(&self) -> RwLockReadGuard<'_, Inner> {
        self.inner.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> RwLockWriteGuard<'_, Inner> {
        self.inner.write().unwrap_or_else(|e| e.into_inner())
    }

    /// Appends a validated event, then applies it.
    fn commit(inner: &mut Inner, event: Event) -> Result<usize> {
        inner.log.append(&event)?;
        let seq = inner.log.len() as usize;
        inner
            .state
            .apply(&event)
            .map_err(|message| OracleError::Corrupt { line: seq, message })
    }

    pub fn register_user(&self, handle: &str) -> Result<Registration> {
        let handle = handle.trim();
        if handle.is_empty() || handle.chars().count() > MAX_HANDLE_LEN {
            return Err(OracleError::Validation(format!(
                "handle must be 1 to {MAX_HANDLE_LEN} characters"
            )));
        }
        let mut inner = self.write();
        if inner.state.handle_taken(handle) {
            return Err(OracleError::Conflict(format!("handle {handle:?} is taken")));
        }
        let mut raw = [0u8; 32];
        rand::rng().fill_bytes(&mut raw);
        let token = hex::encode(raw);
        let id = uuid::Uuid::new_v4().to_string();
        let at = self.clock.now();
        Self::commit(
            &mut inner,
            Event::UserCreated {
                id: id.clone(),
                handle: handle.to_string(),
                token_hash: hash_token(&token),
                at,
            },
        )?;
        Ok(Registration {
            user: User {
                id,
                handle: handle.to_string(),
                created_at: at,
            },
            token,
        })
    }

    /// User id for a bearer token.
    pub fn authenticate(&self, token: &str) -> Result<String> {
        self.read()
            .state
            .user_for_token_hash(&hash_token(token))
            .map(str::to_string)
            .ok_or(OracleError::Unauthorized)
    }

    pub fn check_admin(&self, token: &str) -> Result<()> {
        let expected = &self.config.admin_token;
        if expected.is_empty() || hash_token(token) != hash_token(expected) {
            return Err(OracleError::Unauthorized);
        }
        Ok(())
    }

    pub fn submit_prediction(
        &self,
        user_id: &str,
        symbol: &str,
        target_date: NaiveDate,
        predicted_price: f64,
    ) -> Result<PredictionRecord> {
        let symbol = normalize_symbol(symbol)
            .ok_or_else(|| OracleError::Validation(format!("invalid symbol {symbol:?}")))?;
        if !(predicted_price.is_finite() && predicted_price > 0.0) {
            return Err(OracleError::Validation("predicted_price must be positive".into()));
        }
        let now = self.clock.now();
        if now.date_naive() >= target_date {
            return Err(OracleError::Validation(format!(
                "target_date {target_date} is not in the future"
            )));
        }
        let mut inner = self.write();
        if inner.state.user(user_id).is_none() {
            return Err(OracleError::NotFound(format!("unknown user {user_id}")));
        }
        if inner.state.resolution(&symbol, target_date).is_some() {
            return Err(OracleError::Conflict(format!("{symbol} {target_date} is already resolved")));
        }
        let id = uuid::Uuid::new_v4().to_string();
        Self::commit(
            &mut inner,
            Event::PredictionSubmitted {
                id,
                user_id: user_id.to_string(),
                symbol: symbol.clone(),
                target_date,
                predicted_price,
                at: now,
            },
        )?;
        Ok(inner
            .state
            .open_record(user_id, &symbol, target_date)
            .cloned()
            .expect("record just applied"))
    }

    /// Resolves all open predictions for the day. Repeating a resolution
    /// with the same price resolves nothing; a different price conflicts.
    pub fn resolve(&self, symbol: &str, date: NaiveDate, actual_price: f64) -> Result<usize> {
        let symbol = normalize_symbol(symbol)
            .ok_or_else(|| OracleError::Validation(format!("invalid symbol {symbol:?}")))?;
        if !(actual_price.is_finite() && actual_price > 0.0) {
            return Err(OracleError::Validation("actual_price must be positive".into()));
        }
        let mut inner = self.write();
        match inner.state.resolution(&symbol, date) {
            Some(prev) if prev == actual_price => return Ok(0),
            Some(prev) => {
                return Err(OracleError::Conflict(format!(
                    "{symbol} {date} was resolved at {prev}"
                )))
            }
            None => {}
        }
        let at = self.clock.now();
        Self::commit(
            &mut inner,
            Event::PredictionResolved {
                symbol,
                date,
                actual_price,
                at,
            },
        )
    }

    fn handle_of(state: &State, id: &str) -> String {
        state.user(id).map(|u| u.handle.clone()).unwrap_or_default()
    }

    pub fn leaderboard(
        &self,
        from: Option<NaiveDate>,
        to: Option<NaiveDate>,
        min_resolved: Option<usize>,
    ) -> Result<Vec<RankedUser>> {
        let window = Window::new(from.unwrap_or(NaiveDate::MIN), to.unwrap_or(NaiveDate::MAX));
        if window.from > window.to {
            return Err(OracleError::Validation("from is after to".into()));
        }
        let inner = self.read();
        let board = compute_leaderboard(
            &inner.state.scores(),
            window,
            min_resolved.unwrap_or(self.config.min_resolved),
        );
        Ok(board
            .into_iter()
            .map(|entry| RankedUser {
                handle: Self::handle_of(&inner.state, &entry.user_id),
                entry,
            })
            .collect())
    }

    pub fn superforecasters(&self) -> Vec<SuperforecasterView> {
        let inner = self.read();
        Self::superforecasters_in(&inner.state, &self.config)
    }

    fn superforecasters_in(state: &State, config: &ServiceConfig) -> Vec<SuperforecasterView> {
        weekly_superforecasters(&state.scores(), config.min_resolved, config.streak)
            .into_iter()
            .map(|s| SuperforecasterView {
                handle: Self::handle_of(state, &s.user_id),
                user_id: s.user_id,
                consecutive_top_windows: s.consecutive_top_windows,
                flagged: s.flagged,
            })
            .collect()
    }

    pub fn forecast(&self, symbol: &str, target_date: NaiveDate, weight: Option<f64>) -> Result<AugmentedForecast> {
        let symbol = normalize_symbol(symbol)
            .ok_or_else(|| OracleError::Validation(format!("invalid symbol {symbol:?}")))?;
        let weight = weight.unwrap_or(self.config.default_weight);
        if !(0.0..=1.0).contains(&weight) {
            return Err(OracleError::Validation("weight must lie in [0, 1]".into()));
        }
        let ml_value = match &self.ml {
            Some(ml) => ml
                .value(&symbol, target_date)
                .map_err(|e| OracleError::Validation(format!("model forecast failed: {e}")))?
                .filter(|v| v.is_finite() && *v > 0.0),
            None => None,
        };
        let inner = self.read();
        let flagged: std::collections::HashSet<String> = Self::superforecasters_in(&inner.state, &self.config)
            .into_iter()
            .filter(|s| s.flagged)
            .map(|s| s.user_id)
            .collect();
        let open: Vec<&PredictionRecord> = inner.state.open_for(&symbol, target_date).collect();
        let everyone: Vec<f64> = open.iter().map(|r| r.predicted_price).collect();
        let top: Vec<f64> = open
            .iter()
            .filter(|r| flagged.contains(&r.user_id))
            .map(|r| r.predicted_price)
            .collect();
        augmented_forecast(&symbol, target_date, ml_value, &top, &everyone, weight).ok_or_else(|| {
            OracleError::NotFound(format!("no model or human forecast for {symbol} on {target_date}"))
        })
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    /// Number of events in the log.
    pub fn event_count(&self) -> u64 {
        self.read().log.len()
    }
}
