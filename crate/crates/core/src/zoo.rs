//! The five benchmark architectures and their parameter accounting.
//!
//! | model     | layers                                                             | params (d = 1, time_step 10) |
//! |-----------|--------------------------------------------------------------------|------------------------------|
//! | BiLSTM    | BiLSTM(50, relu) -> Dense(1)                                       | 20,901                       |
//! | CNN_LSTM  | TD Conv1D(64, k=1, relu) -> TD MaxPool(2) -> TD Flatten -> LSTM(50, relu) -> Dense(1) | 128 + 74,200 + 51 |
//! | GRU       | GRU(32, seq) -> GRU(32, seq) -> GRU(32) -> Dropout(0.2) -> Dense(1) | 15,777                       |
//! | LSTM_GRU  | LSTM(32, seq) x2 -> GRU(32, seq) x2 -> GRU(32) -> Dense(1)          | 4,352 + 8,320 + 3 x 6,240 + 33 |
//! | ARIMA     | grid over p x q with d = 0                                         | -                            |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::neural::{Activation, LayerSpec, NetworkModel, NeuralError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZooError {
    #[error("time_step must be at least {min}, got {got}")]
    TimeStep { min: usize, got: usize },
    #[error("unknown model name {0:?}")]
    UnknownModel(String),
    #[error("candidate list for {0} is empty")]
    EmptyCandidates(&'static str),
    #[error("{0} is not a neural network model")]
    NotNeural(ZooName),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

pub type Result<T> = std::result::Result<T, ZooError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ZooName {
    #[serde(rename = "BiLSTM")]
    BiLstm,
    #[serde(rename = "ARIMA")]
    Arima,
    #[serde(rename = "CNN_LSTM")]
    CnnLstm,
    #[serde(rename = "GRU")]
    Gru,
    #[serde(rename = "LSTM_GRU")]
    LstmGru,
}

impl ZooName {
    /// Report order.
    pub const ALL: [ZooName; 5] = [
        ZooName::BiLstm,
        ZooName::Arima,
        ZooName::CnnLstm,
        ZooName::Gru,
        ZooName::LstmGru,
    ];

    pub const NEURAL: [ZooName; 4] = [
        ZooName::BiLstm,
        ZooName::CnnLstm,
        ZooName::Gru,
        ZooName::LstmGru,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ZooName::BiLstm => "BiLSTM",
            ZooName::Arima => "ARIMA",
            ZooName::CnnLstm => "CNN_LSTM",
            ZooName::Gru => "GRU",
            ZooName::LstmGru => "LSTM_GRU",
        }
    }

    pub fn is_neural(self) -> bool {
        self != ZooName::Arima
    }

    pub fn min_time_step(self) -> usize {
        match self {
            ZooName::CnnLstm => 2,
            _ => 1,
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ZooName::BiLstm => "bidirectional LSTM, 50 relu units, dense output",
            ZooName::Arima => "ARIMA(p, 0, q) chosen by grid search on held-out MAE",
            ZooName::CnnLstm => "time-distributed Conv1D/MaxPool feature extractor feeding an LSTM",
            ZooName::Gru => "three stacked 32-unit GRU layers with dropout",
            ZooName::LstmGru => "two LSTM layers followed by three GRU layers, 32 units each",
        }
    }

    /// Shape of one input sample for a lag window of `time_step` values.
    pub fn input_shape(self, time_step: usize) -> Vec<usize> {
        match self {
            ZooName::CnnLstm => vec![1, time_step, 1],
            _ => vec![time_step, 1],
        }
    }

    pub fn layers(self) -> Result<Vec<LayerSpec>> {
        use Activation::{Linear, Relu, Tanh};
        let out = LayerSpec::dense(1, Linear);
        Ok(match self {
            ZooName::BiLstm => vec![LayerSpec::bidirectional_lstm(50, Relu, false), out],
            ZooName::CnnLstm => vec![
                LayerSpec::Conv1D {
                    filters: 64,
                    kernel_size: 1,
                    activation: Relu,
                    time_distributed: true,
                },
                LayerSpec::MaxPool1D {
                    pool_size: 2,
                    time_distributed: true,
                },
                LayerSpec::Flatten {
                    time_distributed: true,
                },
                LayerSpec::lstm(50, Relu, false),
                out,
            ],
            ZooName::Gru => vec![
                LayerSpec::gru(32, Tanh, true),
                LayerSpec::gru(32, Tanh, true),
                LayerSpec::gru(32, Tanh, false),
                LayerSpec::Dropout { rate: 0.2 },
                out,
            ],
            ZooName::LstmGru => vec![
                LayerSpec::lstm(32, Tanh, true),
                LayerSpec::lstm(32, Tanh, true),
                LayerSpec::gru(32, Tanh, true),
                LayerSpec::gru(32, Tanh, true),
                LayerSpec::gru(32, Tanh, false),
                out,
            ],
            ZooName::Arima => return Err(ZooError::NotNeural(self)),
        })
    }

    /// Builds the network with freshly initialised parameters.
    pub fn build(self, time_step: usize, seed: u64) -> Result<NetworkModel> {
        let min = self.min_time_step();
        if time_step < min {
            return Err(ZooError::TimeStep { min, got: time_step });
        }
        Ok(NetworkModel::new(self.input_shape(time_step), self.layers()?, seed)?)
    }
}

impl fmt::Display for ZooName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for ZooName {
    type Err = ZooError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        ZooName::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| ZooError::UnknownModel(s.to_string()))
    }
}

/// Candidate orders for the ARIMA grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArimaGridConfig {
    pub p_values: Vec<usize>,
    pub q_values: Vec<usize>,
}

impl Default for ArimaGridConfig {
    fn default() -> Self {
        Self {
            p_values: (0..=4).collect(),
            q_values: (0..=4).collect(),
        }
    }
}

impl ArimaGridConfig {
    pub fn new(p_values: Vec<usize>, q_values: Vec<usize>) -> Result<Self> {
        let cfg = Self { p_values, q_values };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_values.is_empty() {
            return Err(ZooError::EmptyCandidates("p"));
        }
        if self.q_values.is_empty() {
            return Err(ZooError::EmptyCandidates("q"));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.p_values.len() * self.q_values.len()
    }
}

pub fn arima_grid_config() -> ArimaGridConfig {
    ArimaGridConfig::default()
}

/// What a zoo entry instantiates.
#[derive(Debug, Clone, PartialEq)]
pub enum ZooSpec {
    Network(NetworkModel),
    ArimaGrid(ArimaGridConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZooEntry {
    pub name: ZooName,
    pub spec: ZooSpec,
    pub description: &'static str,
}

/// All five entries in report order.
pub fn entries(time_step: usize, seed: u64) -> Result<Vec<ZooEntry>> {
    ZooName::ALL
        .into_iter()
        .map(|name| {
            let spec = if name.is_neural() {
                ZooSpec::Network(name.build(time_step, seed)?)
            } else {
                ZooSpec::ArimaGrid(arima_grid_config())
            };
            Ok(ZooEntry {
                name,
                spec,
                description: name.description(),
            })
        })
        .collect()
}

pub fn build_bilstm(time_step: usize, seed: u64) -> Result<NetworkModel> {
    ZooName::BiLstm.build(time_step, seed)
}

pub fn build_cnn_lstm(time_step: usize, seed: u64) -> Result<NetworkModel> {
    ZooName::CnnLstm.build(time_step, seed)
}

pub fn build_gru_stack(time_step: usize, seed: u64) -> Result<NetworkModel> {
    ZooName::Gru.build(time_step, seed)
}

pub fn build_lstm_gru(time_step: usize, seed: u64) -> Result<NetworkModel> {
    ZooName::LstmGru.build(time_step, seed)
}

pub fn param_count(model: &NetworkModel) -> usize {
    model.param_count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::LayerKind;

    fn kinds(m: &NetworkModel) -> Vec<LayerKind> {
        m.layers().iter().map(LayerSpec::kind).collect()
    }

    #[test]
    fn names_parse_case_insensitively() {
        for n in ZooName::ALL {
            assert_eq!(n.as_str().to_lowercase().parse::<ZooName>().unwrap(), n);
        }
        assert!("lstm".parse::<ZooName>().is_err());
    }

    #[test]
    fn layer_lists() {
        use LayerKind::*;
        assert_eq!(kinds(&build_bilstm(10, 0).unwrap()), [BidirectionalLstm, Dense]);
        assert_eq!(
            kinds(&build_gru_stack(10, 0).unwrap()),
            [Gru, Gru, Gru, Dropout, Dense]
        );
        assert_eq!(
            kinds(&build_lstm_gru(10, 0).unwrap()),
            [Lstm, Lstm, Gru, Gru, Gru, Dense]
        );
        assert_eq!(
            kinds(&build_cnn_lstm(10, 0).unwrap()),
            [Conv1D, MaxPool1D, Flatten, Lstm, Dense]
        );
    }

    #[test]
    fn cnn_shapes() {
        let m = build_cnn_lstm(10, 0).unwrap();
        let shapes = m.layer_output_shapes();
        assert_eq!(shapes[0], [1, 10, 64]);
        assert_eq!(shapes[1], [1, 5, 64]);
        assert_eq!(shapes[2], [1, 320]);
        for t in [2, 10, 11] {
            assert_eq!(build_cnn_lstm(t, 0).unwrap().output_shape(), [1]);
        }
    }

    #[test]
    fn time_step_preconditions() {
        assert!(matches!(build_bilstm(0, 0), Err(ZooError::TimeStep { .. })));
        assert!(build_cnn_lstm(1, 0).is_err());
        assert!(build_lstm_gru(1, 0).is_ok());
        assert!(ZooName::Arima.build(10, 0).is_err());
    }

    #[test]
    fn grid_config() {
        assert_eq!(arima_grid_config().cells(), 25);
        assert_eq!(ArimaGridConfig::new(vec![1], vec![1]).unwrap().cells(), 1);
        assert!(ArimaGridConfig::new(vec![], vec![1]).is_err());
    }

    #[test]
    fn entries_cover_table() {
        let e = entries(10, 1).unwrap();
        let names: Vec<_> = e.iter().map(|e| e.name).collect();
        assert_eq!(names, ZooName::ALL);
        assert!(matches!(e[1].spec, ZooSpec::ArimaGrid(_)));
    }

    #[test]
    fn rebuild_is_bitwise() {
        for n in ZooName::NEURAL {
            assert_eq!(n.build(7, 13).unwrap(), n.build(7, 13).unwrap());
        }
    }

    #[test]
    fn empty_network_counts_zero() {
        assert_eq!(NetworkModel::new(vec![3], vec![], 0).unwrap().param_count(), 0);
        let d = NetworkModel::new(vec![100], vec![LayerSpec::dense(1, Activation::Linear)], 0).unwrap();
        assert_eq!(param_count(&d), 101);
    }
}
