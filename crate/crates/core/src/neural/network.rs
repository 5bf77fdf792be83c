//! Sequential network: layer stack, parameters, forward/backward passes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::adam::AdamState;
use super::conv::{
    conv1d_backward, conv1d_forward_cached, maxpool1d_backward, maxpool1d_forward_cached,
    ConvCache, PoolCache,
};
use super::layers::{LayerSpec, ParamSpec};
use super::ops::{dense_backward, dense_pre, dropout_mask, mse_loss};
use super::recurrent::{recurrent_backward, recurrent_forward, RecurrentCache};
use super::tensor::Tensor;
use super::{Mode, NeuralError, Result};

/// Gradient blocks with the same layout as [`NetworkModel::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Vec<Tensor>>);

impl Gradients {
    pub fn zeros_like(params: &[Vec<Tensor>]) -> Self {
        Gradients(
            params
                .iter()
                .map(|block| block.iter().map(|t| Tensor::zeros(t.shape())).collect())
                .collect(),
        )
    }

    pub fn flat(&self) -> Vec<f64> {
        self.0
            .iter()
            .flatten()
            .flat_map(|t| t.data().iter().copied())
            .collect()
    }

    pub(crate) fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.0.iter_mut().flatten().zip(other.0.iter().flatten()) {
            for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += scale * y;
            }
        }
    }
}

#[derive(Debug, Clone)]
enum LayerCache {
    Dense { input: Vec<f64>, pre: Vec<f64> },
    Recurrent(RecurrentCache),
    Conv(ConvCache),
    Pool(PoolCache),
    Flatten { shape: Vec<usize> },
    Dropout { mask: Option<Vec<f64>> },
    Distributed(Vec<LayerCache>),
}

/// Appends which side of every kink (relu zero, max-pool winner) the
/// forward pass took. Two points with equal signatures lie on the same
/// smooth piece of the loss.
fn push_branches(spec: &LayerSpec, cache: &LayerCache, out: &mut Vec<usize>) {
    let relu_sides = |pre: &[f64], out: &mut Vec<usize>| out.extend(pre.iter().map(|&v| usize::from(v > 0.0)));
    match (spec, cache) {
        (_, LayerCache::Distributed(slices)) => {
            for c in slices {
                push_branches(spec, c, out);
            }
        }
        (LayerSpec::Dense { activation, .. }, LayerCache::Dense { pre, .. }) if *activation == Activation::Relu => {
            relu_sides(pre, out)
        }
        (LayerSpec::Conv1D { activation, .. }, LayerCache::Conv(c)) if *activation == Activation::Relu => {
            relu_sides(c.pre(), out)
        }
        (
            LayerSpec::Lstm { activation, .. }
            | LayerSpec::Gru { activation, .. }
            | LayerSpec::BidirectionalLstm { activation, .. },
            LayerCache::Recurrent(c),
        ) => c.push_branches(*activation, out),
        (_, LayerCache::Pool(c)) => out.extend_from_slice(c.argmax()),
        _ => {}
    }
}

fn forward_inner<R: Rng + ?Sized>(
    spec: &LayerSpec,
    params: &[Tensor],
    input: &Tensor,
    mode: Mode,
    rng: &mut R,
) -> Result<(Tensor, LayerCache)> {
    match *spec {
        LayerSpec::Dense { activation, .. } => {
            let pre = dense_pre(input.data(), &params[0], &params[1])?;
            let out = pre.iter().map(|&v| activation.apply(v)).collect();
            Ok((
                Tensor::vector(out),
                LayerCache::Dense {
                    input: input.data().to_vec(),
                    pre,
                },
            ))
        }
        LayerSpec::Lstm { .. } | LayerSpec::Gru { .. } | LayerSpec::BidirectionalLstm { .. } => {
            let (out, cache) = recurrent_forward(input, spec, params)?;
            Ok((out, LayerCache::Recurrent(cache)))
        }
        LayerSpec::Conv1D { activation, .. } => {
            let (out, cache) = conv1d_forward_cached(input, &params[0], &params[1], activation)?;
            Ok((out, LayerCache::Conv(cache)))
        }
        LayerSpec::MaxPool1D { pool_size, .. } => {
            let (out, cache) = maxpool1d_forward_cached(input, pool_size)?;
            Ok((out, LayerCache::Pool(cache)))
        }
        LayerSpec::Flatten { .. } => {
            let shape = input.shape().to_vec();
            let out = input.clone().reshape(vec![input.len()])?;
            Ok((out, LayerCache::Flatten { shape }))
        }
        LayerSpec::Dropout { rate } => match mode {
            Mode::Train if rate > 0.0 => {
                let mask = dropout_mask(input.len(), rate, rng);
                let data = input.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
                Ok((
                    Tensor::from_parts(input.shape().to_vec(), data),
                    LayerCache::Dropout { mask: Some(mask) },
                ))
            }
            _ => Ok((input.clone(), LayerCache::Dropout { mask: None })),
        },
    }
}

fn backward_inner(
    spec: &LayerSpec,
    params: &[Tensor],
    cache: &LayerCache,
    dout: &Tensor,
    grads: &mut [Tensor],
) -> Result<Tensor> {
    match (spec, cache) {
        (LayerSpec::Dense { activation, .. }, LayerCache::Dense { input, pre }) => {
            let (dw, db) = grads.split_at_mut(1);
            let dx = dense_backward(input, pre, &params[0], *activation, dout.data(), &mut dw[0], &mut db[0]);
            Ok(Tensor::vector(dx))
        }
        (_, LayerCache::Recurrent(c)) => recurrent_backward(spec, params, c, dout, grads),
        (LayerSpec::Conv1D { activation, .. }, LayerCache::Conv(c)) => {
            let (dk, db) = grads.split_at_mut(1);
            Ok(conv1d_backward(c, &params[0], *activation, dout, &mut dk[0], &mut db[0]))
        }
        (_, LayerCache::Pool(c)) => Ok(maxpool1d_backward(c, dout)),
        (_, LayerCache::Flatten { shape }) => dout.clone().reshape(shape.clone()),
        (_, LayerCache::Dropout { mask }) => Ok(match mask {
            Some(mask) => {
                let data = dout.data().iter().zip(mask).map(|(d, m)| d * m).collect();
                Tensor::from_parts(dout.shape().to_vec(), data)
            }
            None => dout.clone(),
        }),
        _ => Err(NeuralError::InvalidLayer(format!(
            "cache does not match layer {:?}",
            spec.kind()
        ))),
    }
}

fn forward_layer<R: Rng + ?Sized>(
    spec: &LayerSpec,
    params: &[Tensor],
    input: &Tensor,
    mode: Mode,
    rng: &mut R,
) -> Result<(Tensor, LayerCache)> {
    if !spec.is_time_distributed() {
        return forward_inner(spec, params, input, mode, rng);
    }
    if input.rank() < 2 {
        return Err(NeuralError::ShapeMismatch {
            context: "time-distributed input",
            expected: vec![0, 0],
            actual: input.shape().to_vec(),
        });
    }
    let mut outs = Vec::with_capacity(input.shape()[0]);
    let mut caches = Vec::with_capacity(input.shape()[0]);
    for slice in input.outer_slices() {
        let (o, c) = forward_inner(spec, params, &slice, mode, rng)?;
        outs.push(o);
        caches.push(c);
    }
    Ok((Tensor::stack(outs), LayerCache::Distributed(caches)))
}

fn backward_layer(
    spec: &LayerSpec,
    params: &[Tensor],
    cache: &LayerCache,
    dout: &Tensor,
    grads: &mut [Tensor],
) -> Result<Tensor> {
    match cache {
        LayerCache::Distributed(caches) => {
            let parts = dout
                .outer_slices()
                .iter()
                .zip(caches)
                .map(|(d, c)| backward_inner(spec, params, c, d, grads))
                .collect::<Result<Vec<_>>>()?;
            Ok(Tensor::stack(parts))
        }
        other => backward_inner(spec, params, other, dout, grads),
    }
}

fn init_tensor(spec: &ParamSpec, rng: &mut ChaCha8Rng) -> Tensor {
    let len: usize = spec.shape.iter().product();
    if spec.is_bias {
        return Tensor::zeros(&spec.shape);
    }
    let limit = (6.0 / (spec.fan_in + spec.fan_out) as f64).sqrt();
    let data = (0..len)
        .map(|_| rng.random_range(-limit..=limit))
        .collect();
    Tensor::from_parts(spec.shape.clone(), data)
}

/// An ordered layer stack with its parameters and optimiser state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    input_shape: Vec<usize>,
    layers: Vec<LayerSpec>,
    params: Vec<Vec<Tensor>>,
    adam_state: AdamState,
    rng_seed: u64,
}

impl NetworkModel {
    /// Builds the stack for one input sample of `input_shape`, with
    /// Glorot-uniform weights and zero biases drawn from `seed`.
    pub fn new(input_shape: Vec<usize>, layers: Vec<LayerSpec>, seed: u64) -> Result<Self> {
        let specs = Self::param_layout(&input_shape, &layers)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params: Vec<Vec<Tensor>> = specs
            .iter()
            .map(|block| block.iter().map(|s| init_tensor(s, &mut rng)).collect())
            .collect();
        let adam_state = AdamState::new(&params);
        Ok(Self {
            input_shape,
            layers,
            params,
            adam_state,
            rng_seed: seed,
        })
    }

    /// Builds a model with explicit parameter values.
    pub fn with_params(
        input_shape: Vec<usize>,
        layers: Vec<LayerSpec>,
        params: Vec<Vec<Tensor>>,
        seed: u64,
    ) -> Result<Self> {
        let specs = Self::param_layout(&input_shape, &layers)?;
        let shapes_ok = specs.len() == params.len()
            && specs.iter().zip(&params).all(|(s, p)| {
                s.len() == p.len() && s.iter().zip(p).all(|(a, b)| a.shape == b.shape())
            });
        if !shapes_ok {
            return Err(NeuralError::InvalidLayer(
                "parameter blocks do not match the layer stack".into(),
            ));
        }
        let adam_state = AdamState::new(&params);
        Ok(Self {
            input_shape,
            layers,
            params,
            adam_state,
            rng_seed: seed,
        })
    }

    fn param_layout(input_shape: &[usize], layers: &[LayerSpec]) -> Result<Vec<Vec<ParamSpec>>> {
        if input_shape.is_empty() || input_shape.iter().any(|&d| d == 0) {
            return Err(NeuralError::InvalidLayer(format!(
                "invalid input shape {input_shape:?}"
            )));
        }
        let mut shape = input_shape.to_vec();
        let mut specs = Vec::with_capacity(layers.len());
        for layer in layers {
            specs.push(layer.param_specs(&shape)?);
            shape = layer.output_shape(&shape)?;
        }
        Ok(specs)
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn params(&self) -> &[Vec<Tensor>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Vec<Tensor>] {
        &mut self.params
    }

    pub fn adam_state(&self) -> &AdamState {
        &self.adam_state
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    /// Shape of each layer's output, in order.
    pub fn layer_output_shapes(&self) -> Vec<Vec<usize>> {
        let mut shape = self.input_shape.clone();
        self.layers
            .iter()
            .map(|l| {
                shape = l.output_shape(&shape).expect("validated at construction");
                shape.clone()
            })
            .collect()
    }

    pub fn output_shape(&self) -> Vec<usize> {
        self.layer_output_shapes()
            .pop()
            .unwrap_or_else(|| self.input_shape.clone())
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().flatten().map(Tensor::len).sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.params
            .iter()
            .flatten()
            .flat_map(|t| t.data().iter().copied())
            .collect()
    }

    /// Mutable access to the `index`-th scalar parameter in flat order.
    pub fn flat_param_mut(&mut self, mut index: usize) -> Option<&mut f64> {
        for t in self.params.iter_mut().flatten() {
            if index < t.len() {
                return Some(&mut t.data_mut()[index]);
            }
            index -= t.len();
        }
        None
    }

    /// Shapes a flat lag window into one input sample.
    pub fn input_from_window(&self, window: &[f64]) -> Result<Tensor> {
        let expected: usize = self.input_shape.iter().product();
        if window.len() != expected {
            return Err(NeuralError::ShapeMismatch {
                context: "input window",
                expected: self.input_shape.clone(),
                actual: vec![window.len()],
            });
        }
        Tensor::new(self.input_shape.clone(), window.to_vec())
    }

    fn check_input(&self, input: &Tensor) -> Result<()> {
        if input.shape() != self.input_shape.as_slice() {
            return Err(NeuralError::ShapeMismatch {
                context: "network input",
                expected: self.input_shape.clone(),
                actual: input.shape().to_vec(),
            });
        }
        Ok(())
    }

    fn forward_traced<R: Rng + ?Sized>(
        &self,
        input: &Tensor,
        mode: Mode,
        rng: &mut R,
    ) -> Result<(Tensor, Vec<LayerCache>)> {
        self.check_input(input)?;
        let mut x = input.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        for (layer, params) in self.layers.iter().zip(&self.params) {
            let (out, cache) = forward_layer(layer, params, &x, mode, rng)?;
            caches.push(cache);
            x = out;
        }
        Ok((x, caches))
    }

    pub fn forward<R: Rng + ?Sized>(&self, input: &Tensor, mode: Mode, rng: &mut R) -> Result<Tensor> {
        self.forward_traced(input, mode, rng).map(|(out, _)| out)
    }

    /// MSE loss of one sample. Dropout masks are drawn from `rng` in
    /// training mode.
    pub fn loss<R: Rng + ?Sized>(
        &self,
        input: &Tensor,
        target: &[f64],
        mode: Mode,
        rng: &mut R,
    ) -> Result<f64> {
        let out = self.forward(input, mode, rng)?;
        mse_loss(out.data(), target).map(|(l, _)| l)
    }

    /// Loss together with the kink signature of its forward pass.
    pub(crate) fn loss_and_branches<R: Rng + ?Sized>(
        &self,
        input: &Tensor,
        target: &[f64],
        mode: Mode,
        rng: &mut R,
    ) -> Result<(f64, Vec<usize>)> {
        let (out, caches) = self.forward_traced(input, mode, rng)?;
        let mut branches = Vec::new();
        for (layer, cache) in self.layers.iter().zip(&caches) {
            push_branches(layer, cache, &mut branches);
        }
        Ok((mse_loss(out.data(), target)?.0, branches))
    }

    /// Loss and exact reverse-mode gradients for one sample. Dropout masks
    /// sampled in the forward pass are reused in the backward pass.
    pub fn compute_gradients<R: Rng + ?Sized>(
        &self,
        input: &Tensor,
        target: &[f64],
        mode: Mode,
        rng: &mut R,
    ) -> Result<(f64, Gradients)> {
        let (out, caches) = self.forward_traced(input, mode, rng)?;
        let (loss, dpred) = mse_loss(out.data(), target)?;
        let mut grads = Gradients::zeros_like(&self.params);
        let mut dout = Tensor::from_parts(out.shape().to_vec(), dpred);
        for (i, layer) in self.layers.iter().enumerate().rev() {
            dout = backward_layer(layer, &self.params[i], &caches[i], &dout, &mut grads.0[i])?;
        }
        Ok((loss, grads))
    }

    /// Scalar predictions in evaluation mode (dropout disabled).
    pub fn predict(&self, inputs: &[Vec<f64>]) -> Result<Vec<f64>> {
        let out_shape = self.output_shape();
        if out_shape.iter().product::<usize>() != 1 {
            return Err(NeuralError::ShapeMismatch {
                context: "scalar network output",
                expected: vec![1],
                actual: out_shape,
            });
        }
        // evaluation mode never draws from the generator
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        inputs
            .iter()
            .map(|w| {
                let x = self.input_from_window(w)?;
                Ok(self.forward(&x, Mode::Eval, &mut rng)?.data()[0])
            })
            .collect()
    }

    pub(crate) fn apply_gradients(&mut self, grads: &Gradients, config: &super::adam::AdamConfig, learning_rate: f64) {
        super::adam::adam_step(&mut self.params, grads, &mut self.adam_state, config, learning_rate);
    }

    pub fn save_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| NeuralError::Serialization(e.to_string()))
    }

    pub fn load_json(text: &str) -> Result<Self> {
        let model: NetworkModel =
            serde_json::from_str(text).map_err(|e| NeuralError::Serialization(e.to_string()))?;
        // re-validate the layout and every stored value
        Self::with_params(
            model.input_shape.clone(),
            model.layers.clone(),
            model.params.clone(),
            model.rng_seed,
        )?;
        for t in model.params.iter().flatten() {
            Tensor::new(t.shape().to_vec(), t.data().to_vec())?;
        }
        Ok(model)
    }
}
