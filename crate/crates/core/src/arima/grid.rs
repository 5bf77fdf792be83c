//! Nested p x q order search scored by one-step MAE on held-out actuals.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit, ArimaError, ArimaModel, ArimaOrder, Result};
use crate::metrics::mae;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridEntry {
    pub order: ArimaOrder,
    /// One-step MAE on the evaluation actuals; `None` when the cell failed.
    pub mae: Option<f64>,
    pub train_seconds: f64,
    pub converged: bool,
    pub error: Option<String>,
    #[serde(skip)]
    pub model: Option<ArimaModel>,
}

#[derive(Debug, Clone)]
pub struct GridResult {
    /// Cells sorted by (p, q).
    pub entries: Vec<GridEntry>,
    pub best: usize,
}

impl GridResult {
    pub fn best_entry(&self) -> &GridEntry {
        &self.entries[self.best]
    }

    pub fn best_model(&self) -> &ArimaModel {
        self.entries[self.best]
            .model
            .as_ref()
            .expect("best entry always carries its model")
    }

    /// Wall-clock fit time summed over every cell.
    pub fn total_train_seconds(&self) -> f64 {
        self.entries.iter().map(|e| e.train_seconds).sum()
    }
}

fn maes_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Index of the minimal-MAE order. MAEs equal to 12 significant decimals are
/// broken by smaller p + q, then smaller p. Cells without an MAE are skipped.
pub fn select_best(cells: &[(ArimaOrder, Option<f64>)]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, (order, score)) in cells.iter().enumerate() {
        let Some(score) = *score else { continue };
        let Some(b) = best else {
            best = Some(i);
            continue;
        };
        let (b_order, b_score) = (cells[b].0, cells[b].1.expect("scored"));
        let better = if maes_tie(score, b_score) {
            (order.p + order.q, order.p) < (b_order.p + b_order.q, b_order.p)
        } else {
            score < b_score
        };
        if better {
            best = Some(i);
        }
    }
    best
}

fn evaluate_cell(train: &[f64], eval_actuals: &[f64], order: ArimaOrder) -> GridEntry {
    let start = Instant::now();
    let fitted = match fit(train, order) {
        Ok(m) => Ok(m),
        // keep the best-so-far parameters; the flag records the cap was hit
        Err(ArimaError::NotConverged { best_so_far, .. }) => Ok(*best_so_far),
        Err(e) => Err(e),
    };
    let train_seconds = start.elapsed().as_secs_f64();
    let scored = fitted.and_then(|model| {
        let preds = model.predict_one_step(train, eval_actuals)?;
        let score = mae(&preds, eval_actuals).map_err(|_| ArimaError::TooShort {
            p: order.p,
            q: order.q,
            required: 1,
            actual: eval_actuals.len(),
        })?;
        Ok((model, score))
    });
    match scored {
        Ok((model, score)) if score.is_finite() => GridEntry {
            order,
            mae: Some(score),
            train_seconds,
            converged: model.converged,
            error: None,
            model: Some(model),
        },
        Ok(_) => GridEntry {
            order,
            mae: None,
            train_seconds,
            converged: false,
            error: Some("non-finite MAE".into()),
            model: None,
        },
        Err(e) => GridEntry {
            order,
            mae: None,
            train_seconds,
            converged: false,
            error: Some(e.to_string()),
            model: None,
        },
    }
}

/// Fits every ARIMA(p, 0, q) on `train` and scores its rolling one-step
/// predictions over `eval_actuals`. Cells are evaluated in parallel; the
/// result order is always sorted by (p, q).
pub fn grid_search(
    train: &[f64],
    eval_actuals: &[f64],
    p_params: &[usize],
    q_params: &[usize],
) -> Result<GridResult> {
    if p_params.is_empty() || q_params.is_empty() {
        return Err(ArimaError::EmptyGrid);
    }
    let mut orders: Vec<ArimaOrder> = p_params
        .iter()
        .flat_map(|&p| q_params.iter().map(move |&q| ArimaOrder::new(p, 0, q)))
        .collect();
    orders.sort_by_key(|o| (o.p, o.q));
    orders.dedup();

    let entries: Vec<GridEntry> = orders
        .par_iter()
        .map(|&order| evaluate_cell(train, eval_actuals, order))
        .collect();
    let cells: Vec<_> = entries.iter().map(|e| (e.order, e.mae)).collect();
    let best = select_best(&cells).ok_or(ArimaError::AllCellsFailed)?;
    Ok(GridResult { entries, best })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(p: usize, q: usize) -> ArimaOrder {
        ArimaOrder::new(p, 0, q)
    }

    #[test]
    fn tie_prefers_smaller_total_order() {
        let cells = [(o(2, 1), Some(1.0)), (o(0, 1), Some(1.0 + 1e-14)), (o(3, 3), Some(2.0))];
        assert_eq!(select_best(&cells), Some(1));
        // same p + q: smaller p wins
        let cells = [(o(1, 1), Some(5.0)), (o(0, 2), Some(5.0))];
        assert_eq!(select_best(&cells), Some(1));
        // a real difference beats the tie rule
        let cells = [(o(0, 0), Some(5.0)), (o(4, 4), Some(4.9))];
        assert_eq!(select_best(&cells), Some(1));
    }

    #[test]
    fn failed_cells_are_skipped() {
        let cells = [(o(0, 0), None), (o(1, 0), Some(3.0))];
        assert_eq!(select_best(&cells), Some(1));
        assert_eq!(select_best(&[(o(0, 0), None)]), None);
    }

    #[test]
    fn single_cell_grid() {
        let train: Vec<f64> = (0..50).map(|i| 10.0 + (i as f64 * 0.7).sin()).collect();
        let eval: Vec<f64> = (50..60).map(|i| 10.0 + (i as f64 * 0.7).sin()).collect();
        let g = grid_search(&train, &eval, &[0], &[0]).unwrap();
        assert_eq!(g.entries.len(), 1);
        assert_eq!(g.best, 0);
        assert!(grid_search(&train, &eval, &[], &[0]).is_err());
    }

    #[test]
    fn every_cell_failing_is_an_error() {
        // too short for any order above (0,0,0)
        let train = [1.0, 2.0];
        assert!(matches!(
            grid_search(&train, &[3.0], &[2], &[2]),
            Err(ArimaError::AllCellsFailed)
        ));
    }
}
