//! LSTM and GRU cells: single-step forward maps and their reverse-mode
//! derivatives.
//!
//! LSTM (gates ordered i, f, g, o in the stacked weights):
//!
//! ```text
//! i, f, o = sigmoid(W_* x + U_* h_prev + b_*)
//! g       = act(W_g x + U_g h_prev + b_g)
//! c       = f * c_prev + i * g
//! h       = o * act(c)
//! ```
//!
//! GRU (gates ordered z, r, h):
//!
//! ```text
//! z, r = sigmoid(W_* x + U_* h_prev + b_*)
//! cand = act(W_h x + U_h (r * h_prev) + b_h)
//! h    = z * h_prev + (1 - z) * cand
//! ```

use super::activation::{sigmoid, Activation};
use super::tensor::Tensor;
use super::{NeuralError, Result};

/// Borrowed view of one gated cell's `W`, `U` and `b` tensors.
#[derive(Debug, Clone, Copy)]
pub struct CellWeights<'a> {
    pub w: &'a [f64],
    pub u: &'a [f64],
    pub b: &'a [f64],
    pub input_dim: usize,
    pub units: usize,
    gates: usize,
}

impl<'a> CellWeights<'a> {
    fn from_tensors(gates: usize, w: &'a Tensor, u: &'a Tensor, b: &'a Tensor) -> Result<Self> {
        let (rows, input_dim) = match w.shape() {
            [r, c] => (*r, *c),
            other => {
                return Err(NeuralError::ShapeMismatch {
                    context: "cell input weights",
                    expected: vec![0, 0],
                    actual: other.to_vec(),
                })
            }
        };
        if rows % gates != 0 || rows == 0 {
            return Err(NeuralError::InvalidLayer(format!(
                "cell weights have {rows} rows, not a multiple of {gates}"
            )));
        }
        let units = rows / gates;
        if u.shape() != [rows, units] {
            return Err(NeuralError::ShapeMismatch {
                context: "cell recurrent weights",
                expected: vec![rows, units],
                actual: u.shape().to_vec(),
            });
        }
        if b.shape() != [rows] {
            return Err(NeuralError::ShapeMismatch {
                context: "cell bias",
                expected: vec![rows],
                actual: b.shape().to_vec(),
            });
        }
        Ok(Self {
            w: w.data(),
            u: u.data(),
            b: b.data(),
            input_dim,
            units,
            gates,
        })
    }

    pub fn lstm(w: &'a Tensor, u: &'a Tensor, b: &'a Tensor) -> Result<Self> {
        Self::from_tensors(4, w, u, b)
    }

    pub fn gru(w: &'a Tensor, u: &'a Tensor, b: &'a Tensor) -> Result<Self> {
        Self::from_tensors(3, w, u, b)
    }

    fn check(&self, x: &[f64], h_prev: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(NeuralError::ShapeMismatch {
                context: "cell input",
                expected: vec![self.input_dim],
                actual: vec![x.len()],
            });
        }
        if h_prev.len() != self.units {
            return Err(NeuralError::ShapeMismatch {
                context: "cell hidden state",
                expected: vec![self.units],
                actual: vec![h_prev.len()],
            });
        }
        Ok(())
    }

    /// `b + W x` for all gates.
    fn input_affine(&self, x: &[f64]) -> Vec<f64> {
        let d = self.input_dim;
        (0..self.gates * self.units)
            .map(|r| {
                let row = &self.w[r * d..(r + 1) * d];
                self.b[r] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    /// `U[rows] v` for a contiguous block of gate rows.
    fn recurrent_rows(&self, rows: std::ops::Range<usize>, v: &[f64], out: &mut [f64]) {
        let n = self.units;
        for (o, r) in out.iter_mut().zip(rows) {
            let row = &self.u[r * n..(r + 1) * n];
            *o += row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

/// Gradient accumulators mirroring a cell's `W`, `U`, `b`.
pub(crate) struct CellGrads<'a> {
    pub w: &'a mut [f64],
    pub u: &'a mut [f64],
    pub b: &'a mut [f64],
}

fn outer_acc(acc: &mut [f64], rows: &[f64], cols: &[f64]) {
    let width = cols.len();
    for (r, &dr) in rows.iter().enumerate() {
        if dr == 0.0 {
            continue;
        }
        let slot = &mut acc[r * width..(r + 1) * width];
        for (s, &c) in slot.iter_mut().zip(cols) {
            *s += dr * c;
        }
    }
}

/// `M^T v` for a row-major `rows x cols` matrix.
fn transpose_mul(m: &[f64], cols: usize, v: &[f64], out: &mut [f64]) {
    for (r, &vr) in v.iter().enumerate() {
        if vr == 0.0 {
            continue;
        }
        let row = &m[r * cols..(r + 1) * cols];
        for (o, &a) in out.iter_mut().zip(row) {
            *o += a * vr;
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LstmCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    g_pre: Vec<f64>,
    c: Vec<f64>,
}

impl LstmCache {
    pub fn h(&self, act: Activation) -> Vec<f64> {
        self.o
            .iter()
            .zip(&self.c)
            .map(|(o, c)| o * act.apply(*c))
            .collect()
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// Relu sides taken by the candidate and the cell output.
    pub(crate) fn push_branches(&self, out: &mut Vec<usize>) {
        out.extend(self.g_pre.iter().map(|&v| usize::from(v > 0.0)));
        out.extend(self.c.iter().map(|&v| usize::from(v > 0.0)));
    }
}

pub(crate) fn lstm_forward(
    wts: &CellWeights<'_>,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    act: Activation,
) -> LstmCache {
    let n = wts.units;
    let mut a = wts.input_affine(x);
    wts.recurrent_rows(0..4 * n, h_prev, &mut a);
    let i: Vec<f64> = a[..n].iter().map(|&v| sigmoid(v)).collect();
    let f: Vec<f64> = a[n..2 * n].iter().map(|&v| sigmoid(v)).collect();
    let g_pre = a[2 * n..3 * n].to_vec();
    let g: Vec<f64> = g_pre.iter().map(|&v| act.apply(v)).collect();
    let o: Vec<f64> = a[3 * n..].iter().map(|&v| sigmoid(v)).collect();
    let c: Vec<f64> = (0..n).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
    LstmCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        i,
        f,
        g,
        o,
        g_pre,
        c,
    }
}

/// Backward through one LSTM step. `dh` and `dc` are the total gradients
/// flowing into this step's outputs. Returns `(dx, dh_prev, dc_prev)`.
pub(crate) fn lstm_backward(
    wts: &CellWeights<'_>,
    cache: &LstmCache,
    dh: &[f64],
    dc: &[f64],
    act: Activation,
    grads: &mut CellGrads<'_>,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = wts.units;
    let mut da = vec![0.0; 4 * n];
    let mut dc_prev = vec![0.0; n];
    for k in 0..n {
        let c_act = act.apply(cache.c[k]);
        let d_o = dh[k] * c_act;
        let dc_total = dc[k] + dh[k] * cache.o[k] * act.derivative(cache.c[k]);
        let d_i = dc_total * cache.g[k];
        let d_g = dc_total * cache.i[k];
        let d_f = dc_total * cache.c_prev[k];
        dc_prev[k] = dc_total * cache.f[k];
        da[k] = d_i * cache.i[k] * (1.0 - cache.i[k]);
        da[n + k] = d_f * cache.f[k] * (1.0 - cache.f[k]);
        da[2 * n + k] = d_g * act.derivative(cache.g_pre[k]);
        da[3 * n + k] = d_o * cache.o[k] * (1.0 - cache.o[k]);
    }
    outer_acc(grads.w, &da, &cache.x);
    outer_acc(grads.u, &da, &cache.h_prev);
    for (b, d) in grads.b.iter_mut().zip(&da) {
        *b += d;
    }
    let mut dx = vec![0.0; wts.input_dim];
    transpose_mul(wts.w, wts.input_dim, &da, &mut dx);
    let mut dh_prev = vec![0.0; n];
    transpose_mul(wts.u, n, &da, &mut dh_prev);
    (dx, dh_prev, dc_prev)
}

/// One LSTM step: returns the new hidden and cell states.
pub fn lstm_step(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    weights: &CellWeights<'_>,
    activation: Activation,
) -> Result<(Vec<f64>, Vec<f64>)> {
    weights.check(x, h_prev)?;
    if c_prev.len() != weights.units {
        return Err(NeuralError::ShapeMismatch {
            context: "cell state",
            expected: vec![weights.units],
            actual: vec![c_prev.len()],
        });
    }
    let cache = lstm_forward(weights, x, h_prev, c_prev, activation);
    Ok((cache.h(activation), cache.c))
}

#[derive(Debug, Clone)]
pub(crate) struct GruCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    rh: Vec<f64>,
    cand_pre: Vec<f64>,
    cand: Vec<f64>,
    h: Vec<f64>,
}

impl GruCache {
    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub(crate) fn push_branches(&self, out: &mut Vec<usize>) {
        out.extend(self.cand_pre.iter().map(|&v| usize::from(v > 0.0)));
    }
}

pub(crate) fn gru_forward(
    wts: &CellWeights<'_>,
    x: &[f64],
    h_prev: &[f64],
    act: Activation,
) -> GruCache {
    let n = wts.units;
    let mut a = wts.input_affine(x);
    wts.recurrent_rows(0..2 * n, h_prev, &mut a[..2 * n]);
    let z: Vec<f64> = a[..n].iter().map(|&v| sigmoid(v)).collect();
    let r: Vec<f64> = a[n..2 * n].iter().map(|&v| sigmoid(v)).collect();
    let rh: Vec<f64> = r.iter().zip(h_prev).map(|(r, h)| r * h).collect();
    wts.recurrent_rows(2 * n..3 * n, &rh, &mut a[2 * n..]);
    let cand_pre = a[2 * n..].to_vec();
    let cand: Vec<f64> = cand_pre.iter().map(|&v| act.apply(v)).collect();
    let h = (0..n)
        .map(|k| z[k] * h_prev[k] + (1.0 - z[k]) * cand[k])
        .collect();
    GruCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        z,
        r,
        rh,
        cand_pre,
        cand,
        h,
    }
}

/// Backward through one GRU step. Returns `(dx, dh_prev)`.
pub(crate) fn gru_backward(
    wts: &CellWeights<'_>,
    cache: &GruCache,
    dh: &[f64],
    act: Activation,
    grads: &mut CellGrads<'_>,
) -> (Vec<f64>, Vec<f64>) {
    let n = wts.units;
    let mut dh_prev: Vec<f64> = dh.iter().zip(&cache.z).map(|(d, z)| d * z).collect();
    let mut da = vec![0.0; 3 * n];
    for k in 0..n {
        let dz = dh[k] * (cache.h_prev[k] - cache.cand[k]);
        let dcand = dh[k] * (1.0 - cache.z[k]);
        da[k] = dz * cache.z[k] * (1.0 - cache.z[k]);
        da[2 * n + k] = dcand * act.derivative(cache.cand_pre[k]);
    }
    // candidate path through U_h (r * h_prev)
    let mut drh = vec![0.0; n];
    transpose_mul(&wts.u[2 * n * n..], n, &da[2 * n..], &mut drh);
    for k in 0..n {
        let dr = drh[k] * cache.h_prev[k];
        dh_prev[k] += drh[k] * cache.r[k];
        da[n + k] = dr * cache.r[k] * (1.0 - cache.r[k]);
    }

    outer_acc(grads.w, &da, &cache.x);
    outer_acc(&mut grads.u[..2 * n * n], &da[..2 * n], &cache.h_prev);
    outer_acc(&mut grads.u[2 * n * n..], &da[2 * n..], &cache.rh);
    for (b, d) in grads.b.iter_mut().zip(&da) {
        *b += d;
    }
    let mut dx = vec![0.0; wts.input_dim];
    transpose_mul(wts.w, wts.input_dim, &da, &mut dx);
    transpose_mul(&wts.u[..2 * n * n], n, &da[..2 * n], &mut dh_prev);
    (dx, dh_prev)
}

/// One GRU step: returns the new hidden state.
pub fn gru_step(
    x: &[f64],
    h_prev: &[f64],
    weights: &CellWeights<'_>,
    activation: Activation,
) -> Result<Vec<f64>> {
    weights.check(x, h_prev)?;
    Ok(gru_forward(weights, x, h_prev, activation).h)
}
