//! 1-D convolution and max pooling with 'same' padding, stride 1 for the
//! convolution and stride = pool size for pooling.

use super::activation::Activation;
use super::tensor::Tensor;
use super::{NeuralError, Result};

fn dims(seq: &Tensor, context: &'static str) -> Result<(usize, usize)> {
    match seq.shape() {
        [t, c] if *t > 0 && *c > 0 => Ok((*t, *c)),
        [0, _] => Err(NeuralError::EmptySequence),
        other => Err(NeuralError::ShapeMismatch {
            context,
            expected: vec![0, 0],
            actual: other.to_vec(),
        }),
    }
}

#[derive(Debug, Clone)]
pub(crate) struct ConvCache {
    input: Tensor,
    pre: Vec<f64>,
}

impl ConvCache {
    pub(crate) fn pre(&self) -> &[f64] {
        &self.pre
    }
}

/// Cross-correlation of `seq [T x c_in]` with `kernel [k x c_in x f]`, zero
/// padded so the output keeps length `T`.
pub(crate) fn conv1d_forward_cached(
    seq: &Tensor,
    kernel: &Tensor,
    bias: &Tensor,
    activation: Activation,
) -> Result<(Tensor, ConvCache)> {
    let (t_len, c_in) = dims(seq, "conv1d input [T x c]")?;
    let [k, kc, filters] = kernel.shape() else {
        return Err(NeuralError::ShapeMismatch {
            context: "conv1d kernel [k x c_in x filters]",
            expected: vec![0, c_in, 0],
            actual: kernel.shape().to_vec(),
        });
    };
    let (k, filters) = (*k, *filters);
    if *kc != c_in || bias.shape() != [filters] {
        return Err(NeuralError::ShapeMismatch {
            context: "conv1d parameters",
            expected: vec![k, c_in, filters],
            actual: kernel.shape().to_vec(),
        });
    }
    let pad_left = (k - 1) / 2;
    let x = seq.data();
    let w = kernel.data();
    let mut pre = vec![0.0; t_len * filters];
    for t in 0..t_len {
        let out = &mut pre[t * filters..(t + 1) * filters];
        out.copy_from_slice(bias.data());
        for j in 0..k {
            let src = t as isize + j as isize - pad_left as isize;
            if src < 0 || src >= t_len as isize {
                continue;
            }
            let xrow = &x[src as usize * c_in..(src as usize + 1) * c_in];
            for (ci, &xv) in xrow.iter().enumerate() {
                let wrow = &w[(j * c_in + ci) * filters..(j * c_in + ci + 1) * filters];
                for (o, &wv) in out.iter_mut().zip(wrow) {
                    *o += xv * wv;
                }
            }
        }
    }
    let out = pre.iter().map(|&v| activation.apply(v)).collect();
    Ok((
        Tensor::from_parts(vec![t_len, filters], out),
        ConvCache {
            input: seq.clone(),
            pre,
        },
    ))
}

pub fn conv1d_forward(
    seq: &Tensor,
    kernel: &Tensor,
    bias: &Tensor,
    activation: Activation,
) -> Result<Tensor> {
    conv1d_forward_cached(seq, kernel, bias, activation).map(|(out, _)| out)
}

pub(crate) fn conv1d_backward(
    cache: &ConvCache,
    kernel: &Tensor,
    activation: Activation,
    dout: &Tensor,
    dkernel: &mut Tensor,
    dbias: &mut Tensor,
) -> Tensor {
    let t_len = cache.input.shape()[0];
    let c_in = cache.input.shape()[1];
    let k = kernel.shape()[0];
    let filters = kernel.shape()[2];
    let pad_left = (k - 1) / 2;
    let x = cache.input.data();
    let w = kernel.data();
    let dpre: Vec<f64> = dout
        .data()
        .iter()
        .zip(&cache.pre)
        .map(|(d, p)| d * activation.derivative(*p))
        .collect();
    let mut dx = vec![0.0; t_len * c_in];
    let dw = dkernel.data_mut();
    for t in 0..t_len {
        let d = &dpre[t * filters..(t + 1) * filters];
        for (b, dv) in dbias.data_mut().iter_mut().zip(d) {
            *b += dv;
        }
        for j in 0..k {
            let src = t as isize + j as isize - pad_left as isize;
            if src < 0 || src >= t_len as isize {
                continue;
            }
            let src = src as usize;
            for ci in 0..c_in {
                let base = (j * c_in + ci) * filters;
                let xv = x[src * c_in + ci];
                let mut acc = 0.0;
                for f in 0..filters {
                    dw[base + f] += d[f] * xv;
                    acc += d[f] * w[base + f];
                }
                dx[src * c_in + ci] += acc;
            }
        }
    }
    Tensor::from_parts(vec![t_len, c_in], dx)
}

#[derive(Debug, Clone)]
pub(crate) struct PoolCache {
    input_shape: Vec<usize>,
    argmax: Vec<usize>,
}

impl PoolCache {
    pub(crate) fn argmax(&self) -> &[usize] {
        &self.argmax
    }
}

pub(crate) fn maxpool1d_forward_cached(seq: &Tensor, pool_size: usize) -> Result<(Tensor, PoolCache)> {
    if pool_size == 0 {
        return Err(NeuralError::InvalidLayer("pool_size must be positive".into()));
    }
    let (t_len, c) = dims(seq, "maxpool input [T x c]")?;
    let out_len = t_len.div_ceil(pool_size);
    // 'same' padding: total padding split with the smaller half on the left
    let pad_left = (out_len * pool_size - t_len) / 2;
    let x = seq.data();
    let mut out = vec![f64::NEG_INFINITY; out_len * c];
    let mut argmax = vec![0; out_len * c];
    for o in 0..out_len {
        let start = (o * pool_size) as isize - pad_left as isize;
        for p in 0..pool_size {
            let t = start + p as isize;
            if t < 0 || t >= t_len as isize {
                continue;
            }
            let t = t as usize;
            for ch in 0..c {
                let v = x[t * c + ch];
                if v > out[o * c + ch] {
                    out[o * c + ch] = v;
                    argmax[o * c + ch] = t * c + ch;
                }
            }
        }
    }
    Ok((
        Tensor::from_parts(vec![out_len, c], out),
        PoolCache {
            input_shape: seq.shape().to_vec(),
            argmax,
        },
    ))
}

pub fn maxpool1d_forward(seq: &Tensor, pool_size: usize) -> Result<Tensor> {
    maxpool1d_forward_cached(seq, pool_size).map(|(out, _)| out)
}

pub(crate) fn maxpool1d_backward(cache: &PoolCache, dout: &Tensor) -> Tensor {
    let mut dx = Tensor::zeros(&cache.input_shape);
    for (&src, &d) in cache.argmax.iter().zip(dout.data()) {
        dx.data_mut()[src] += d;
    }
    dx
}
