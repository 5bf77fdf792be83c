//! Leaderboards over resolved predictions and superforecaster streaks.
//!
//! These are pure functions of the resolved scores so they can be checked
//! in isolation and recomputed after a replay.

use std::collections::BTreeMap;

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Serialize};

/// Means closer than this share a rank.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// One resolved prediction, reduced to what ranking needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Score {
    pub user_id: String,
    pub target_date: NaiveDate,
    pub pct_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub user_id: String,
    pub resolved_count: usize,
    pub mean_pct_error: f64,
    pub rank: usize,
    pub window_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub from: NaiveDate,
    pub to: NaiveDate,
}

impl Window {
    pub fn new(from: NaiveDate, to: NaiveDate) -> Self {
        Self { from, to }
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.from <= d && d <= self.to
    }

    pub fn id(&self) -> String {
        format!("{}..{}", self.from, self.to)
    }

    /// The Monday-to-Sunday week containing `d`.
    pub fn week_of(d: NaiveDate) -> Self {
        let monday = d - Days::new(d.weekday().num_days_from_monday() as u64);
        Self::new(monday, monday + Days::new(6))
    }
}

/// Competition ranks ("1, 1, 3") for values already sorted ascending.
pub fn competition_ranks(sorted: &[f64]) -> Vec<usize> {
    let mut ranks = Vec::with_capacity(sorted.len());
    let mut leader = f64::NAN;
    for (i, &v) in sorted.iter().enumerate() {
        if i > 0 && (v - leader).abs() <= TIE_TOLERANCE {
            ranks.push(ranks[i - 1]);
        } else {
            ranks.push(i + 1);
            leader = v;
        }
    }
    ranks
}

/// Users with at least `min_resolved` scores inside `window`, ranked by
/// mean percentage error ascending (ties by user id for a stable order).
pub fn compute_leaderboard(scores: &[Score], window: Window, min_resolved: usize) -> Vec<LeaderboardEntry> {
    let mut per_user: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    for s in scores.iter().filter(|s| window.contains(s.target_date)) {
        let e = per_user.entry(&s.user_id).or_default();
        e.0 += 1;
        e.1 += s.pct_error;
    }
    let mut rows: Vec<(&str, usize, f64)> = per_user
        .into_iter()
        .filter(|(_, (n, _))| *n >= min_resolved.max(1))
        .map(|(u, (n, sum))| (u, n, sum / n as f64))
        .collect();
    rows.sort_by(|a, b| a.2.total_cmp(&b.2).then_with(|| a.0.cmp(b.0)));
    let means: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let window_id = window.id();
    rows.into_iter()
        .zip(competition_ranks(&means))
        .map(|((user_id, resolved_count, mean_pct_error), rank)| LeaderboardEntry {
            user_id: user_id.to_string(),
            resolved_count,
            mean_pct_error,
            rank,
            window_id: window_id.clone(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreakConfig {
    pub top_fraction: f64,
    pub min_consecutive: usize,
}

impl Default for StreakConfig {
    fn default() -> Self {
        Self {
            top_fraction: 0.1,
            min_consecutive: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperforecasterStatus {
    pub user_id: String,
    pub consecutive_top_windows: usize,
    pub flagged: bool,
}

/// Highest rank that counts as "top" on a board of `n` entries.
pub fn top_cutoff(n: usize, top_fraction: f64) -> usize {
    // guard against 0.1 * 30 evaluating to 3.0000000000000004
    let c = (top_fraction * n as f64 - 1e-9).ceil();
    (c.max(0.0) as usize).max(1)
}

/// Current streak of consecutive top windows ending at the last board, for
/// every user who appears on any board. Sorted by user id.
pub fn detect_superforecasters(history: &[Vec<LeaderboardEntry>], config: StreakConfig) -> Vec<SuperforecasterStatus> {
    let mut streaks: BTreeMap<&str, usize> = BTreeMap::new();
    for board in history {
        for e in board {
            streaks.entry(&e.user_id).or_insert(0);
        }
    }
    for board in history {
        let cutoff = top_cutoff(board.len(), config.top_fraction);
        for (user, streak) in streaks.iter_mut() {
            let top = board.iter().any(|e| e.user_id == *user && e.rank <= cutoff);
            *streak = if top { *streak + 1 } else { 0 };
        }
    }
    streaks
        .into_iter()
        .map(|(user_id, streak)| SuperforecasterStatus {
            user_id: user_id.to_string(),
            consecutive_top_windows: streak,
            flagged: streak >= config.min_consecutive,
        })
        .collect()
}

/// Weekly windows from the week of the earliest scored date through the
/// week of the latest one, empty weeks included.
pub fn weekly_windows(scores: &[Score]) -> Vec<Window> {
    let (Some(first), Some(last)) = (
        scores.iter().map(|s| s.target_date).min(),
        scores.iter().map(|s| s.target_date).max(),
    ) else {
        return Vec::new();
    };
    let mut w = Window::week_of(first);
    let end = Window::week_of(last);
    let mut out = vec![w];
    while w != end {
        w = Window::new(w.from + Days::new(7), w.to + Days::new(7));
        out.push(w);
    }
    out
}

/// Weekly leaderboards followed by streak detection.
pub fn weekly_superforecasters(
    scores: &[Score],
    min_resolved: usize,
    config: StreakConfig,
) -> Vec<SuperforecasterStatus> {
    let boards: Vec<_> = weekly_windows(scores)
        .into_iter()
        .map(|w| compute_leaderboard(scores, w, min_resolved))
        .collect();
    detect_superforecasters(&boards, config)
}
