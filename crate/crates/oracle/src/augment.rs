//! Convex combination of the model forecast and the human consensus.

use chrono::NaiveDate;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsensusSource {
    Superforecasters,
    AllUsers,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AugmentedForecast {
    pub symbol: String,
    pub target_date: NaiveDate,
    #[serde(with = "crate::price::option")]
    pub ml_value: Option<f64>,
    #[serde(with = "crate::price::option")]
    pub human_consensus: Option<f64>,
    pub consensus_source: ConsensusSource,
    pub human_count: usize,
    pub weight: f64,
    #[serde(with = "crate::price")]
    pub combined: f64,
}

/// Human consensus: the mean of flagged superforecasters' predictions when
/// there are any, otherwise the mean over everyone.
pub fn consensus(flagged: &[f64], everyone: &[f64]) -> (Option<f64>, ConsensusSource, usize) {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    if !flagged.is_empty() {
        (Some(mean(flagged)), ConsensusSource::Superforecasters, flagged.len())
    } else if !everyone.is_empty() {
        (Some(mean(everyone)), ConsensusSource::AllUsers, everyone.len())
    } else {
        (None, ConsensusSource::None, 0)
    }
}

/// `weight * ml + (1 - weight) * consensus`. With only one leg present the
/// result is that leg, and the reported weight says which (1 for model
/// only, 0 for humans only). Returns `None` when neither leg exists.
pub fn combine(ml_value: Option<f64>, human: Option<f64>, weight: f64) -> Option<(f64, f64)> {
    match (ml_value, human) {
        (Some(ml), Some(h)) => Some((weight * ml + (1.0 - weight) * h, weight)),
        (Some(ml), None) => Some((ml, 1.0)),
        (None, Some(h)) => Some((h, 0.0)),
        (None, None) => None,
    }
}

pub fn augmented_forecast(
    symbol: &str,
    target_date: NaiveDate,
    ml_value: Option<f64>,
    flagged: &[f64],
    everyone: &[f64],
    weight: f64,
) -> Option<AugmentedForecast> {
    let (human_consensus, consensus_source, human_count) = consensus(flagged, everyone);
    let (combined, weight) = combine(ml_value, human_consensus, weight)?;
    Some(AugmentedForecast {
        symbol: symbol.to_string(),
        target_date,
        ml_value,
        human_consensus,
        consensus_source,
        human_count,
        weight,
        combined,
    })
}
