//! ARIMA(p, 0, q) estimation by conditional least squares.
//!
//! The model is written in intercept form
//!
//! ```text
//! y_t = c + sum_i phi_i * y_{t-i} + sum_j theta_j * e_{t-j} + e_t
//! ```
//!
//! Pre-sample observations are replaced by the training mean and pre-sample
//! shocks by zero. The same recursion drives fitting, rolling one-step
//! prediction and multi-step forecasting, so in-sample residuals can be
//! replayed exactly.

mod grid;
mod optim;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use grid::{grid_search, select_best, GridEntry, GridResult};
pub use optim::{minimize, numeric_gradient, BfgsOptions, Minimum};

#[derive(Debug, Error)]
pub enum ArimaError {
    #[error("differencing order d = {0} is not supported (only d = 0)")]
    UnsupportedDifferencing(usize),
    #[error("series too short for ARIMA({p},0,{q}): need {required} points, got {actual}")]
    TooShort {
        p: usize,
        q: usize,
        required: usize,
        actual: usize,
    },
    #[error("series contains a non-finite value at index {0}")]
    NonFinite(usize),
    #[error("history of {actual} points is shorter than the model memory {required}")]
    InsufficientHistory { required: usize, actual: usize },
    #[error("forecast horizon must be at least 1")]
    ZeroHorizon,
    #[error("optimizer did not converge after {iterations} iterations")]
    NotConverged {
        iterations: usize,
        /// Best parameters found before the iteration cap.
        best_so_far: Box<ArimaModel>,
    },
    #[error("candidate lists for p and q must be non-empty")]
    EmptyGrid,
    #[error("every grid cell failed to fit")]
    AllCellsFailed,
}

pub type Result<T> = std::result::Result<T, ArimaError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaOrder {
    pub fn new(p: usize, d: usize, q: usize) -> Self {
        Self { p, d, q }
    }

    /// Number of lagged values the recursion looks back over.
    pub fn memory(&self) -> usize {
        self.p.max(self.q)
    }
}

impl std::fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.p, self.d, self.q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaModel {
    pub order: ArimaOrder,
    pub intercept: f64,
    pub ar_coeffs: Vec<f64>,
    pub ma_coeffs: Vec<f64>,
    /// Mean of squared in-sample residuals.
    pub sigma2: f64,
    pub residuals: Vec<f64>,
    pub train_seconds: f64,
    /// Value substituted for observations before the start of the series.
    pub presample_mean: f64,
    pub iterations: usize,
    pub converged: bool,
    /// False when the AR polynomial has a root on or inside the unit circle.
    pub ar_stationary: bool,
    /// False when the MA polynomial has a root on or inside the unit circle.
    pub ma_invertible: bool,
}

impl ArimaModel {
    /// Builds a model from known coefficients, e.g. for simulation or tests.
    /// Residual fields are left empty.
    pub fn from_coefficients(
        intercept: f64,
        ar_coeffs: Vec<f64>,
        ma_coeffs: Vec<f64>,
        presample_mean: f64,
    ) -> Self {
        let order = ArimaOrder::new(ar_coeffs.len(), 0, ma_coeffs.len());
        let ar_stationary = is_stable(&ar_coeffs);
        let neg_ma: Vec<f64> = ma_coeffs.iter().map(|v| -v).collect();
        let ma_invertible = is_stable(&neg_ma);
        Self {
            order,
            intercept,
            ar_coeffs,
            ma_coeffs,
            sigma2: 0.0,
            residuals: Vec::new(),
            train_seconds: 0.0,
            presample_mean,
            iterations: 0,
            converged: true,
            ar_stationary,
            ma_invertible,
        }
    }

    /// Long-run mean `c / (1 - sum(phi))`, if the AR sum differs from one.
    pub fn long_run_mean(&self) -> Option<f64> {
        let denom = 1.0 - self.ar_coeffs.iter().sum::<f64>();
        (denom.abs() > 1e-12).then(|| self.intercept / denom)
    }

    fn ar_term(&self, lagged: impl Fn(usize) -> f64) -> f64 {
        self.ar_coeffs
            .iter()
            .enumerate()
            .map(|(i, phi)| phi * lagged(i + 1))
            .sum()
    }

    fn ma_term(&self, lagged: impl Fn(usize) -> f64) -> f64 {
        self.ma_coeffs
            .iter()
            .enumerate()
            .map(|(j, theta)| theta * lagged(j + 1))
            .sum()
    }

    /// Runs the conditional one-step recursion over `series`, returning the
    /// prediction and residual for every index.
    fn recursion(&self, series: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut preds = Vec::with_capacity(series.len());
        let mut resid: Vec<f64> = Vec::with_capacity(series.len());
        for t in 0..series.len() {
            let y = |lag: usize| {
                if lag <= t {
                    series[t - lag]
                } else {
                    self.presample_mean
                }
            };
            let e = |lag: usize| if lag <= t { resid[t - lag] } else { 0.0 };
            let pred = self.intercept + self.ar_term(y) + self.ma_term(e);
            preds.push(pred);
            resid.push(series[t] - pred);
        }
        (preds, resid)
    }

    /// Coefficients as one vector: `[c, phi_1..phi_p, theta_1..theta_q]`.
    pub fn parameters(&self) -> Vec<f64> {
        let mut x = vec![self.intercept];
        x.extend(&self.ar_coeffs);
        x.extend(&self.ma_coeffs);
        x
    }

    /// Inverse of [`parameters`](Self::parameters). Panics on a length
    /// that does not match the order.
    pub fn set_parameters(&mut self, x: &[f64]) {
        let (p, q) = (self.ar_coeffs.len(), self.ma_coeffs.len());
        assert_eq!(x.len(), 1 + p + q, "parameter vector length");
        self.intercept = x[0];
        self.ar_coeffs.copy_from_slice(&x[1..1 + p]);
        self.ma_coeffs.copy_from_slice(&x[1 + p..]);
    }

    /// Conditional sum-of-squares loss `mean(e_t^2)` over `series` and its
    /// exact gradient with respect to [`parameters`](Self::parameters),
    /// propagating `de_t/dx = -dpred_t/dx` through the MA recursion.
    pub fn css_loss_and_gradient(&self, series: &[f64]) -> (f64, Vec<f64>) {
        let (p, q) = (self.ar_coeffs.len(), self.ma_coeffs.len());
        let k = 1 + p + q;
        let (_, resid) = self.recursion(series);
        let mut de: Vec<Vec<f64>> = Vec::with_capacity(series.len());
        let mut grad = vec![0.0; k];
        for t in 0..series.len() {
            let y = |lag: usize| {
                if lag <= t {
                    series[t - lag]
                } else {
                    self.presample_mean
                }
            };
            let mut d = vec![0.0; k];
            d[0] = -1.0;
            for i in 0..p {
                d[1 + i] = -y(i + 1);
            }
            for j in 0..q {
                let lag = j + 1;
                if lag <= t {
                    d[1 + p + j] -= resid[t - lag];
                }
            }
            for (j, theta) in self.ma_coeffs.iter().enumerate() {
                let lag = j + 1;
                if lag <= t {
                    for (dv, prev) in d.iter_mut().zip(&de[t - lag]) {
                        *dv -= theta * prev;
                    }
                }
            }
            for (g, dv) in grad.iter_mut().zip(&d) {
                *g += 2.0 * resid[t] * dv;
            }
            de.push(d);
        }
        let n = series.len().max(1) as f64;
        let loss = resid.iter().map(|e| e * e).sum::<f64>() / n;
        (loss, grad.into_iter().map(|g| g / n).collect())
    }

    fn check_history(&self, history: &[f64]) -> Result<()> {
        let required = self.order.memory();
        if history.len() < required {
            return Err(ArimaError::InsufficientHistory {
                required,
                actual: history.len(),
            });
        }
        Ok(())
    }

    /// Rolling-origin one-step predictions for each of `actuals`, given the
    /// observations in `history` that precede them. Parameters stay frozen;
    /// each actual is revealed after its prediction is made.
    pub fn predict_one_step(&self, history: &[f64], actuals: &[f64]) -> Result<Vec<f64>> {
        self.check_history(history)?;
        let mut all = Vec::with_capacity(history.len() + actuals.len());
        all.extend_from_slice(history);
        all.extend_from_slice(actuals);
        let (preds, _) = self.recursion(&all);
        Ok(preds[history.len()..].to_vec())
    }

    /// In-sample one-step predictions (`series - residuals`) for `series`.
    pub fn fitted_values(&self, series: &[f64]) -> Vec<f64> {
        self.recursion(series).0
    }

    /// `h` iterated conditional expectations past the end of `history`, with
    /// future shocks set to zero.
    pub fn forecast(&self, history: &[f64], h: usize) -> Result<Vec<f64>> {
        if h == 0 {
            return Err(ArimaError::ZeroHorizon);
        }
        self.check_history(history)?;
        let (_, resid) = self.recursion(history);
        let mut ys = history.to_vec();
        let n = history.len();
        let mut out = Vec::with_capacity(h);
        for k in 0..h {
            let t = n + k;
            let y = |lag: usize| {
                if lag <= t {
                    ys[t - lag]
                } else {
                    self.presample_mean
                }
            };
            let e = |lag: usize| {
                if lag <= t && t - lag < n {
                    resid[t - lag]
                } else {
                    0.0
                }
            };
            let v = self.intercept + self.ar_term(y) + self.ma_term(e);
            ys.push(v);
            out.push(v);
        }
        Ok(out)
    }
}

/// Whether `1 - sum_i a_i z^i` has every root strictly outside the unit
/// circle, via the step-down (reverse Levinson-Durbin) recursion.
pub fn is_stable(coeffs: &[f64]) -> bool {
    let mut a = coeffs.to_vec();
    while let Some(&k) = a.last() {
        if !k.is_finite() || k.abs() >= 1.0 {
            return false;
        }
        let m = a.len();
        let denom = 1.0 - k * k;
        let prev: Vec<f64> = (0..m - 1)
            .map(|i| (a[i] + k * a[m - 2 - i]) / denom)
            .collect();
        a = prev;
    }
    true
}

/// Fits ARIMA(p, 0, q) by conditional least squares.
///
/// Optimisation runs on the standardised series over (mean, phi, theta),
/// starting from the sample mean with all coefficients zero; the result is
/// mapped back to intercept form in the original units.
pub fn fit(series: &[f64], order: ArimaOrder) -> Result<ArimaModel> {
    fit_with(series, order, BfgsOptions::default())
}

pub fn fit_with(series: &[f64], order: ArimaOrder, opts: BfgsOptions) -> Result<ArimaModel> {
    let start = Instant::now();
    let ArimaOrder { p, d, q } = order;
    if d != 0 {
        return Err(ArimaError::UnsupportedDifferencing(d));
    }
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(ArimaError::NonFinite(i));
    }
    let required = p + q + 2;
    if series.len() < required {
        return Err(ArimaError::TooShort {
            p,
            q,
            required,
            actual: series.len(),
        });
    }

    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
    let z: Vec<f64> = series.iter().map(|v| (v - mean) / scale).collect();

    // x = [mu, phi_1..phi_p, theta_1..theta_q] on the standardised scale
    let objective = |x: &[f64]| {
        let (mu, rest) = x.split_first().expect("mean parameter");
        let (phi, theta) = rest.split_at(p);
        let c = mu * (1.0 - phi.iter().sum::<f64>());
        let mut resid = vec![0.0; z.len()];
        let mut sse = 0.0;
        for t in 0..z.len() {
            let mut pred = c;
            for (i, a) in phi.iter().enumerate() {
                let lag = i + 1;
                if lag <= t {
                    pred += a * z[t - lag];
                }
            }
            for (j, b) in theta.iter().enumerate() {
                let lag = j + 1;
                if lag <= t {
                    pred += b * resid[t - lag];
                }
            }
            let e = z[t] - pred;
            resid[t] = e;
            sse += e * e;
        }
        sse / z.len() as f64
    };

    let x0 = vec![0.0; 1 + p + q];
    let min = minimize(objective, &x0, opts);

    let mu = mean + scale * min.x[0];
    let ar_coeffs = min.x[1..1 + p].to_vec();
    let ma_coeffs = min.x[1 + p..].to_vec();
    let intercept = mu * (1.0 - ar_coeffs.iter().sum::<f64>());
    let mut model = ArimaModel::from_coefficients(intercept, ar_coeffs, ma_coeffs, mean);
    let (_, residuals) = model.recursion(series);
    model.sigma2 = residuals.iter().map(|e| e * e).sum::<f64>() / n;
    model.residuals = residuals;
    model.iterations = min.iterations;
    model.converged = min.converged;
    model.train_seconds = start.elapsed().as_secs_f64();

    if !min.converged {
        return Err(ArimaError::NotConverged {
            iterations: min.iterations,
            best_so_far: Box::new(model),
        });
    }
    Ok(model)
}
