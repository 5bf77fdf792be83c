//! In-memory view rebuilt by folding the event log.

use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;

use crate::domain::{Event, PredictionRecord, Status, User};
use crate::ranking::Score;

type OpenKey = (String, String, NaiveDate);

#[derive(Debug, Default, Clone)]
pub struct State {
    users: BTreeMap<String, User>,
    /// Lower-cased handle to user id.
    handles: HashMap<String, String>,
    /// Token hash to user id.
    tokens: HashMap<String, String>,
    records: Vec<PredictionRecord>,
    open: HashMap<OpenKey, usize>,
    resolutions: BTreeMap<(String, NaiveDate), f64>,
}

impl State {
    /// Applies one event. Returns the number of records resolved by a
    /// resolution event and 0 otherwise. Events that contradict the current
    /// state (as only a damaged log could produce) are refused.
    pub fn apply(&mut self, event: &Event) -> Result<usize, String> {
        match event {
            Event::UserCreated {
                id,
                handle,
                token_hash,
                at,
            } => {
                let key = handle.to_lowercase();
                if self.users.contains_key(id) || self.handles.contains_key(&key) {
                    return Err(format!("duplicate user {handle:?}"));
                }
                self.handles.insert(key, id.clone());
                self.tokens.insert(token_hash.clone(), id.clone());
                self.users.insert(
                    id.clone(),
                    User {
                        id: id.clone(),
                        handle: handle.clone(),
                        created_at: *at,
                    },
                );
                Ok(0)
            }
            Event::PredictionSubmitted {
                id,
                user_id,
                symbol,
                target_date,
                predicted_price,
                at,
            } => {
                if !self.users.contains_key(user_id) {
                    return Err(format!("prediction from unknown user {user_id}"));
                }
                if self.resolutions.contains_key(&(symbol.clone(), *target_date)) {
                    return Err(format!("prediction for resolved {symbol} {target_date}"));
                }
                let record = PredictionRecord {
                    id: id.clone(),
                    user_id: user_id.clone(),
                    symbol: symbol.clone(),
                    target_date: *target_date,
                    predicted_price: *predicted_price,
                    submitted_at: *at,
                    status: Status::Open,
                    actual_price: None,
                    abs_error: None,
                    pct_error: None,
                };
                let key = (user_id.clone(), symbol.clone(), *target_date);
                match self.open.get(&key) {
                    // latest submission replaces the open one
                    Some(&i) => self.records[i] = record,
                    None => {
                        self.open.insert(key, self.records.len());
                        self.records.push(record);
                    }
                }
                Ok(0)
            }
            Event::PredictionResolved {
                symbol,
                date,
                actual_price,
                ..
            } => {
                let key = (symbol.clone(), *date);
                if let Some(&prev) = self.resolutions.get(&key) {
                    return if prev == *actual_price {
                        Ok(0)
                    } else {
                        Err(format!("conflicting resolution for {symbol} {date}"))
                    };
                }
                self.resolutions.insert(key, *actual_price);
                let mut count = 0;
                let open = &mut self.open;
                for r in self.records.iter_mut() {
                    if r.status == Status::Open && r.symbol == *symbol && r.target_date == *date {
                        r.resolve(*actual_price);
                        open.remove(&(r.user_id.clone(), r.symbol.clone(), r.target_date));
                        count += 1;
                    }
                }
                Ok(count)
            }
        }
    }

    pub fn user(&self, id: &str) -> Option<&User> {
        self.users.get(id)
    }

    pub fn users(&self) -> impl Iterator<Item = &User> {
        self.users.values()
    }

    pub fn handle_taken(&self, handle: &str) -> bool {
        self.handles.contains_key(&handle.to_lowercase())
    }

    pub fn user_for_token_hash(&self, hash: &str) -> Option<&str> {
        self.tokens.get(hash).map(String::as_str)
    }

    pub fn resolution(&self, symbol: &str, date: NaiveDate) -> Option<f64> {
        self.resolutions.get(&(symbol.to_string(), date)).copied()
    }

    pub fn records(&self) -> &[PredictionRecord] {
        &self.records
    }

    pub fn open_record(&self, user_id: &str, symbol: &str, date: NaiveDate) -> Option<&PredictionRecord> {
        self.open
            .get(&(user_id.to_string(), symbol.to_string(), date))
            .map(|&i| &self.records[i])
    }

    /// Open predictions for one symbol and date.
    pub fn open_for<'a>(&'a self, symbol: &'a str, date: NaiveDate) -> impl Iterator<Item = &'a PredictionRecord> {
        self.records
            .iter()
            .filter(move |r| r.status == Status::Open && r.symbol == symbol && r.target_date == date)
    }

    pub fn scores(&self) -> Vec<Score> {
        self.records
            .iter()
            .filter_map(|r| {
                r.pct_error.map(|pct_error| Score {
                    user_id: r.user_id.clone(),
                    target_date: r.target_date,
                    pct_error,
                })
            })
            .collect()
    }
}
