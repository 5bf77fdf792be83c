use serde::{Deserialize, Serialize};

use super::{NeuralError, Result};

/// Dense row-major array of finite `f64` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(NeuralError::ShapeMismatch {
                context: "tensor data",
                expected: vec![expected],
                actual: vec![data.len()],
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(NeuralError::NonFinite("tensor data"));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    /// Unchecked constructor for internal results known to be well-shaped.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Same data under a new shape with the same element count.
    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        if shape.iter().product::<usize>() != self.data.len() {
            return Err(NeuralError::ShapeMismatch {
                context: "reshape",
                expected: shape,
                actual: self.shape,
            });
        }
        Ok(Self {
            shape,
            data: self.data,
        })
    }

    /// Rows of a rank-2 tensor.
    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        let width = self.shape.last().copied().unwrap_or(1).max(1);
        self.data.chunks(width)
    }

    /// Sub-tensors along the leading axis.
    pub(crate) fn outer_slices(&self) -> Vec<Tensor> {
        let inner: Vec<usize> = self.shape[1..].to_vec();
        let size: usize = inner.iter().product();
        (0..self.shape[0])
            .map(|i| Tensor::from_parts(inner.clone(), self.data[i * size..(i + 1) * size].to_vec()))
            .collect()
    }

    /// Stacks equally-shaped tensors along a new leading axis.
    pub(crate) fn stack(parts: Vec<Tensor>) -> Tensor {
        let inner = parts.first().map(|t| t.shape.clone()).unwrap_or_default();
        let mut shape = vec![parts.len()];
        shape.extend_from_slice(&inner);
        let data = parts.into_iter().flat_map(|t| t.data).collect();
        Tensor::from_parts(shape, data)
    }
}
