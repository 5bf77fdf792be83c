//! Unrolling recurrent cells over a sequence, including bidirectional
//! wrapping, and backpropagation through time.

use super::activation::Activation;
use super::cells::{
    gru_backward, gru_forward, lstm_backward, lstm_forward, CellGrads, CellWeights, GruCache,
    LstmCache,
};
use super::layers::LayerSpec;
use super::tensor::Tensor;
use super::{NeuralError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CellType {
    Lstm,
    Gru,
}

#[derive(Debug, Clone)]
pub(crate) enum DirectionCache {
    Lstm(Vec<LstmCache>),
    Gru(Vec<GruCache>),
}

#[derive(Debug, Clone)]
pub(crate) struct RecurrentCache {
    seq_len: usize,
    forward: DirectionCache,
    backward: Option<DirectionCache>,
}

impl RecurrentCache {
    /// Relu sides taken at every step; smooth activations have none.
    pub(crate) fn push_branches(&self, activation: Activation, out: &mut Vec<usize>) {
        if activation != Activation::Relu {
            return;
        }
        for dir in std::iter::once(&self.forward).chain(&self.backward) {
            match dir {
                DirectionCache::Lstm(steps) => steps.iter().for_each(|s| s.push_branches(out)),
                DirectionCache::Gru(steps) => steps.iter().for_each(|s| s.push_branches(out)),
            }
        }
    }
}

struct RecurrentConfig {
    cell: CellType,
    units: usize,
    activation: Activation,
    return_sequences: bool,
    bidirectional: bool,
}

fn config(spec: &LayerSpec) -> Result<RecurrentConfig> {
    let (cell, bidirectional, units, activation, return_sequences) = match *spec {
        LayerSpec::Lstm {
            units,
            activation,
            return_sequences,
        } => (CellType::Lstm, false, units, activation, return_sequences),
        LayerSpec::Gru {
            units,
            activation,
            return_sequences,
        } => (CellType::Gru, false, units, activation, return_sequences),
        LayerSpec::BidirectionalLstm {
            units,
            activation,
            return_sequences,
        } => (CellType::Lstm, true, units, activation, return_sequences),
        _ => {
            return Err(NeuralError::InvalidLayer(format!(
                "{:?} is not a recurrent layer",
                spec.kind()
            )))
        }
    };
    Ok(RecurrentConfig {
        cell,
        units,
        activation,
        return_sequences,
        bidirectional,
    })
}

fn weights<'a>(cell: CellType, params: &'a [Tensor]) -> Result<CellWeights<'a>> {
    match params {
        [w, u, b, ..] => match cell {
            CellType::Lstm => CellWeights::lstm(w, u, b),
            CellType::Gru => CellWeights::gru(w, u, b),
        },
        _ => Err(NeuralError::InvalidLayer(
            "recurrent layer needs W, U and b".into(),
        )),
    }
}

/// Runs one direction from a zero state; returns per-step hidden outputs.
fn run_direction(
    cell: CellType,
    wts: &CellWeights<'_>,
    xs: &[&[f64]],
    act: Activation,
) -> (Vec<Vec<f64>>, DirectionCache) {
    let n = wts.units;
    let mut h = vec![0.0; n];
    let mut outputs = Vec::with_capacity(xs.len());
    match cell {
        CellType::Lstm => {
            let mut c = vec![0.0; n];
            let mut caches = Vec::with_capacity(xs.len());
            for x in xs {
                let cache = lstm_forward(wts, x, &h, &c, act);
                h = cache.h(act);
                c = cache.c().to_vec();
                outputs.push(h.clone());
                caches.push(cache);
            }
            (outputs, DirectionCache::Lstm(caches))
        }
        CellType::Gru => {
            let mut caches = Vec::with_capacity(xs.len());
            for x in xs {
                let cache = gru_forward(wts, x, &h, act);
                h = cache.h().to_vec();
                outputs.push(h.clone());
                caches.push(cache);
            }
            (outputs, DirectionCache::Gru(caches))
        }
    }
}

/// BPTT for one direction. `dhs[t]` is the gradient arriving at step `t`'s
/// output from above; returns the gradient for each step's input.
fn backprop_direction(
    wts: &CellWeights<'_>,
    cache: &DirectionCache,
    dhs: &[Vec<f64>],
    act: Activation,
    grads: &mut CellGrads<'_>,
) -> Vec<Vec<f64>> {
    let n = wts.units;
    let steps = dhs.len();
    let mut dxs = vec![Vec::new(); steps];
    let mut dh_next = vec![0.0; n];
    match cache {
        DirectionCache::Lstm(caches) => {
            let mut dc_next = vec![0.0; n];
            for t in (0..steps).rev() {
                let dh: Vec<f64> = dhs[t].iter().zip(&dh_next).map(|(a, b)| a + b).collect();
                let (dx, dh_prev, dc_prev) = lstm_backward(wts, &caches[t], &dh, &dc_next, act, grads);
                dxs[t] = dx;
                dh_next = dh_prev;
                dc_next = dc_prev;
            }
        }
        DirectionCache::Gru(caches) => {
            for t in (0..steps).rev() {
                let dh: Vec<f64> = dhs[t].iter().zip(&dh_next).map(|(a, b)| a + b).collect();
                let (dx, dh_prev) = gru_backward(wts, &caches[t], &dh, act, grads);
                dxs[t] = dx;
                dh_next = dh_prev;
            }
        }
    }
    dxs
}

fn sequence_rows(seq: &Tensor) -> Result<Vec<&[f64]>> {
    match seq.shape() {
        [0, _] => Err(NeuralError::EmptySequence),
        [_, d] if *d > 0 => Ok(seq.rows().collect()),
        other => Err(NeuralError::ShapeMismatch {
            context: "recurrent input [T x d]",
            expected: vec![0, 0],
            actual: other.to_vec(),
        }),
    }
}

pub(crate) fn recurrent_forward(
    seq: &Tensor,
    spec: &LayerSpec,
    params: &[Tensor],
) -> Result<(Tensor, RecurrentCache)> {
    let cfg = config(spec)?;
    let rows = sequence_rows(seq)?;
    let t_len = rows.len();
    let fwd_w = weights(cfg.cell, params)?;
    if fwd_w.units != cfg.units || fwd_w.input_dim != seq.shape()[1] {
        return Err(NeuralError::ShapeMismatch {
            context: "recurrent parameters",
            expected: vec![cfg.units, seq.shape()[1]],
            actual: vec![fwd_w.units, fwd_w.input_dim],
        });
    }
    let (fwd_out, fwd_cache) = run_direction(cfg.cell, &fwd_w, &rows, cfg.activation);
    let n = cfg.units;

    if !cfg.bidirectional {
        let out = if cfg.return_sequences {
            Tensor::from_parts(vec![t_len, n], fwd_out.concat())
        } else {
            Tensor::vector(fwd_out[t_len - 1].clone())
        };
        return Ok((
            out,
            RecurrentCache {
                seq_len: t_len,
                forward: fwd_cache,
                backward: None,
            },
        ));
    }

    let bwd_w = weights(cfg.cell, params.get(3..).unwrap_or(&[]))?;
    let reversed: Vec<&[f64]> = rows.iter().rev().copied().collect();
    let (bwd_out, bwd_cache) = run_direction(cfg.cell, &bwd_w, &reversed, cfg.activation);
    let out = if cfg.return_sequences {
        let mut data = Vec::with_capacity(t_len * 2 * n);
        for t in 0..t_len {
            data.extend_from_slice(&fwd_out[t]);
            data.extend_from_slice(&bwd_out[t_len - 1 - t]);
        }
        Tensor::from_parts(vec![t_len, 2 * n], data)
    } else {
        let mut data = fwd_out[t_len - 1].clone();
        data.extend_from_slice(&bwd_out[t_len - 1]);
        Tensor::vector(data)
    };
    Ok((
        out,
        RecurrentCache {
            seq_len: t_len,
            forward: fwd_cache,
            backward: Some(bwd_cache),
        },
    ))
}

fn split_grads(grads: &mut [Tensor]) -> CellGrads<'_> {
    let [w, u, b, ..] = grads else {
        unreachable!("gradient blocks mirror parameter blocks")
    };
    CellGrads {
        w: w.data_mut(),
        u: u.data_mut(),
        b: b.data_mut(),
    }
}

pub(crate) fn recurrent_backward(
    spec: &LayerSpec,
    params: &[Tensor],
    cache: &RecurrentCache,
    dout: &Tensor,
    grads: &mut [Tensor],
) -> Result<Tensor> {
    let cfg = config(spec)?;
    let t_len = cache.seq_len;
    let n = cfg.units;
    let width = if cfg.bidirectional { 2 * n } else { n };

    // per-step upstream gradient for the (possibly concatenated) output
    let mut d_steps = vec![vec![0.0; width]; t_len];
    if cfg.return_sequences {
        for (t, row) in dout.data().chunks(width).enumerate() {
            d_steps[t].copy_from_slice(row);
        }
    } else {
        d_steps[t_len - 1].copy_from_slice(dout.data());
    }

    let fwd_w = weights(cfg.cell, params)?;
    let input_dim = fwd_w.input_dim;
    let fwd_dhs: Vec<Vec<f64>> = d_steps.iter().map(|d| d[..n].to_vec()).collect();
    let (fwd_grads, bwd_grads) = grads.split_at_mut(3.min(grads.len()));
    let mut dxs = backprop_direction(
        &fwd_w,
        &cache.forward,
        &fwd_dhs,
        cfg.activation,
        &mut split_grads(fwd_grads),
    );

    if let Some(bwd_cache) = &cache.backward {
        let bwd_w = weights(cfg.cell, &params[3..])?;
        // reversed-time gradient: output position t pairs with backward step T-1-t,
        // or the final backward step when only the last output is returned
        let mut bwd_dhs = vec![vec![0.0; n]; t_len];
        if cfg.return_sequences {
            for t in 0..t_len {
                bwd_dhs[t_len - 1 - t] = d_steps[t][n..].to_vec();
            }
        } else {
            bwd_dhs[t_len - 1] = d_steps[t_len - 1][n..].to_vec();
        }
        let bwd_dxs = backprop_direction(
            &bwd_w,
            bwd_cache,
            &bwd_dhs,
            cfg.activation,
            &mut split_grads(bwd_grads),
        );
        for t in 0..t_len {
            for (a, b) in dxs[t].iter_mut().zip(&bwd_dxs[t_len - 1 - t]) {
                *a += b;
            }
        }
    }
    Ok(Tensor::from_parts(vec![t_len, input_dim], dxs.concat()))
}

/// Runs a recurrent layer (LSTM, GRU or bidirectional LSTM) over a
/// `[T x d_in]` sequence from a zero initial state.
pub fn run_recurrent_layer(seq: &Tensor, spec: &LayerSpec, params: &[Tensor]) -> Result<Tensor> {
    recurrent_forward(seq, spec, params).map(|(out, _)| out)
}
