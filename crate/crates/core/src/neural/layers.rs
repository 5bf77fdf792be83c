//! Layer descriptions, shape inference and parameter layouts.
//!
//! Parameter blocks per layer (single bias vector per gate):
//!
//! | layer         | tensors                                             |
//! |---------------|-----------------------------------------------------|
//! | Dense         | `W [units x in]`, `b [units]`                       |
//! | LSTM          | `W [4n x d]`, `U [4n x n]`, `b [4n]` (gates i,f,g,o) |
//! | GRU           | `W [3n x d]`, `U [3n x n]`, `b [3n]` (gates z,r,h)   |
//! | Bidirectional | forward LSTM block followed by backward LSTM block  |
//! | Conv1D        | `K [k x c_in x filters]`, `b [filters]`             |
//!
//! which gives `4 (n (d + n) + n)` parameters per LSTM direction and
//! `3 (n (d + n) + n)` per GRU.

use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::{NeuralError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LayerKind {
    Dense,
    Lstm,
    Gru,
    BidirectionalLstm,
    Conv1D,
    MaxPool1D,
    Flatten,
    Dropout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense {
        units: usize,
        activation: Activation,
        #[serde(default)]
        time_distributed: bool,
    },
    Lstm {
        units: usize,
        activation: Activation,
        return_sequences: bool,
    },
    Gru {
        units: usize,
        activation: Activation,
        return_sequences: bool,
    },
    BidirectionalLstm {
        units: usize,
        activation: Activation,
        return_sequences: bool,
    },
    Conv1D {
        filters: usize,
        kernel_size: usize,
        activation: Activation,
        #[serde(default)]
        time_distributed: bool,
    },
    MaxPool1D {
        pool_size: usize,
        #[serde(default)]
        time_distributed: bool,
    },
    Flatten {
        #[serde(default)]
        time_distributed: bool,
    },
    Dropout {
        rate: f64,
    },
}

/// Shape and initialisation fan of one parameter tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpec {
    pub shape: Vec<usize>,
    pub fan_in: usize,
    pub fan_out: usize,
    pub is_bias: bool,
}

impl ParamSpec {
    fn weight(shape: Vec<usize>, fan_in: usize, fan_out: usize) -> Self {
        Self {
            shape,
            fan_in,
            fan_out,
            is_bias: false,
        }
    }

    fn bias(len: usize) -> Self {
        Self {
            shape: vec![len],
            fan_in: 0,
            fan_out: 0,
            is_bias: true,
        }
    }
}

fn gated_params(gates: usize, units: usize, input_dim: usize) -> Vec<ParamSpec> {
    vec![
        ParamSpec::weight(vec![gates * units, input_dim], input_dim, gates * units),
        ParamSpec::weight(vec![gates * units, units], units, gates * units),
        ParamSpec::bias(gates * units),
    ]
}

impl LayerSpec {
    pub fn dense(units: usize, activation: Activation) -> Self {
        LayerSpec::Dense {
            units,
            activation,
            time_distributed: false,
        }
    }

    pub fn lstm(units: usize, activation: Activation, return_sequences: bool) -> Self {
        LayerSpec::Lstm {
            units,
            activation,
            return_sequences,
        }
    }

    pub fn gru(units: usize, activation: Activation, return_sequences: bool) -> Self {
        LayerSpec::Gru {
            units,
            activation,
            return_sequences,
        }
    }

    pub fn bidirectional_lstm(units: usize, activation: Activation, return_sequences: bool) -> Self {
        LayerSpec::BidirectionalLstm {
            units,
            activation,
            return_sequences,
        }
    }

    pub fn kind(&self) -> LayerKind {
        match self {
            LayerSpec::Dense { .. } => LayerKind::Dense,
            LayerSpec::Lstm { .. } => LayerKind::Lstm,
            LayerSpec::Gru { .. } => LayerKind::Gru,
            LayerSpec::BidirectionalLstm { .. } => LayerKind::BidirectionalLstm,
            LayerSpec::Conv1D { .. } => LayerKind::Conv1D,
            LayerSpec::MaxPool1D { .. } => LayerKind::MaxPool1D,
            LayerSpec::Flatten { .. } => LayerKind::Flatten,
            LayerSpec::Dropout { .. } => LayerKind::Dropout,
        }
    }

    pub fn is_time_distributed(&self) -> bool {
        match self {
            LayerSpec::Dense { time_distributed, .. }
            | LayerSpec::Conv1D { time_distributed, .. }
            | LayerSpec::MaxPool1D { time_distributed, .. }
            | LayerSpec::Flatten { time_distributed } => *time_distributed,
            _ => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(NeuralError::InvalidLayer(format!("{:?}: {msg}", self.kind())));
        match *self {
            LayerSpec::Dense { units, .. }
            | LayerSpec::Lstm { units, .. }
            | LayerSpec::Gru { units, .. }
            | LayerSpec::BidirectionalLstm { units, .. }
                if units == 0 =>
            {
                bad("units must be positive")
            }
            LayerSpec::Conv1D {
                filters,
                kernel_size,
                ..
            } if filters == 0 || kernel_size == 0 => bad("filters and kernel_size must be positive"),
            LayerSpec::MaxPool1D { pool_size, .. } if pool_size == 0 => {
                bad("pool_size must be positive")
            }
            LayerSpec::Dropout { rate } if !(0.0..1.0).contains(&rate) => {
                bad("rate must lie in [0, 1)")
            }
            _ => Ok(()),
        }
    }

    /// Rank of the per-slice input the layer's core operation expects.
    fn inner_rank(&self) -> Option<usize> {
        match self {
            LayerSpec::Dense { .. } => Some(1),
            LayerSpec::Lstm { .. }
            | LayerSpec::Gru { .. }
            | LayerSpec::BidirectionalLstm { .. }
            | LayerSpec::Conv1D { .. }
            | LayerSpec::MaxPool1D { .. } => Some(2),
            LayerSpec::Flatten { .. } | LayerSpec::Dropout { .. } => None,
        }
    }

    fn inner_shape<'a>(&self, input: &'a [usize]) -> Result<&'a [usize]> {
        let inner = if self.is_time_distributed() {
            input.get(1..).filter(|_| !input.is_empty())
        } else {
            Some(input)
        };
        let inner = inner.ok_or_else(|| self.shape_error(input))?;
        if let Some(rank) = self.inner_rank() {
            if inner.len() != rank {
                return Err(self.shape_error(input));
            }
        }
        if inner.iter().any(|&d| d == 0) {
            return Err(self.shape_error(input));
        }
        Ok(inner)
    }

    fn shape_error(&self, input: &[usize]) -> NeuralError {
        NeuralError::InvalidLayer(format!(
            "{:?} cannot accept input of shape {:?}",
            self.kind(),
            input
        ))
    }

    /// Output shape for a given input shape (without any batch axis).
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        self.validate()?;
        let inner = self.inner_shape(input)?;
        let out_inner = match *self {
            LayerSpec::Dense { units, .. } => vec![units],
            LayerSpec::Lstm {
                units,
                return_sequences,
                ..
            }
            | LayerSpec::Gru {
                units,
                return_sequences,
                ..
            } => {
                if return_sequences {
                    vec![inner[0], units]
                } else {
                    vec![units]
                }
            }
            LayerSpec::BidirectionalLstm {
                units,
                return_sequences,
                ..
            } => {
                if return_sequences {
                    vec![inner[0], 2 * units]
                } else {
                    vec![2 * units]
                }
            }
            LayerSpec::Conv1D { filters, .. } => vec![inner[0], filters],
            LayerSpec::MaxPool1D { pool_size, .. } => {
                vec![inner[0].div_ceil(pool_size), inner[1]]
            }
            LayerSpec::Flatten { .. } => vec![inner.iter().product()],
            LayerSpec::Dropout { .. } => inner.to_vec(),
        };
        if self.is_time_distributed() {
            let mut shape = vec![input[0]];
            shape.extend(out_inner);
            Ok(shape)
        } else {
            Ok(out_inner)
        }
    }

    /// Parameter tensors the layer owns for a given input shape.
    pub fn param_specs(&self, input: &[usize]) -> Result<Vec<ParamSpec>> {
        self.validate()?;
        let inner = self.inner_shape(input)?;
        Ok(match *self {
            LayerSpec::Dense { units, .. } => vec![
                ParamSpec::weight(vec![units, inner[0]], inner[0], units),
                ParamSpec::bias(units),
            ],
            LayerSpec::Lstm { units, .. } => gated_params(4, units, inner[1]),
            LayerSpec::Gru { units, .. } => gated_params(3, units, inner[1]),
            LayerSpec::BidirectionalLstm { units, .. } => {
                let mut v = gated_params(4, units, inner[1]);
                v.extend(gated_params(4, units, inner[1]));
                v
            }
            LayerSpec::Conv1D {
                filters,
                kernel_size,
                ..
            } => vec![
                ParamSpec::weight(
                    vec![kernel_size, inner[1], filters],
                    kernel_size * inner[1],
                    kernel_size * filters,
                ),
                ParamSpec::bias(filters),
            ],
            LayerSpec::MaxPool1D { .. } | LayerSpec::Flatten { .. } | LayerSpec::Dropout { .. } => {
                Vec::new()
            }
        })
    }
}
