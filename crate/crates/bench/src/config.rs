//! Flat `key = value` run configuration with command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use marketcast_core::zoo::{ArimaGridConfig, ZooName};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("{key}: cannot parse {value:?}")]
    BadValue { key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub data_path: Option<PathBuf>,
    pub time_step: usize,
    pub train_fraction: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub shuffle: bool,
    pub seed: u64,
    pub models: Vec<ZooName>,
    pub arima: ArimaGridConfig,
    pub output_dir: PathBuf,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            data_path: None,
            time_step: 10,
            train_fraction: 0.8,
            epochs: 50,
            batch_size: 1,
            learning_rate: 0.001,
            shuffle: true,
            seed: 42,
            models: ZooName::ALL.to_vec(),
            arima: ArimaGridConfig::default(),
            output_dir: PathBuf::from("bench-out"),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

/// Parses a comma-separated model list, keeping report order and dropping
/// duplicates.
pub fn parse_models(value: &str) -> Result<Vec<ZooName>, ConfigError> {
    let mut names: Vec<ZooName> = parse_list("models", value)?;
    names.sort();
    names.dedup();
    Ok(names)
}

impl BenchConfig {
    /// Parses config text. Relative paths are resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg = BenchConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax { line: i + 1 });
            };
            let (key, value) = (key.trim(), value.trim());
            match key {
                "data_path" => cfg.data_path = Some(base_dir.join(value)),
                "output_dir" => cfg.output_dir = base_dir.join(value),
                "time_step" => cfg.time_step = parse(key, value)?,
                "train_fraction" => cfg.train_fraction = parse(key, value)?,
                "epochs" => cfg.epochs = parse(key, value)?,
                "batch_size" => cfg.batch_size = parse(key, value)?,
                "learning_rate" => cfg.learning_rate = parse(key, value)?,
                "shuffle" => cfg.shuffle = parse(key, value)?,
                "seed" => cfg.seed = parse(key, value)?,
                "models" => cfg.models = parse_models(value)?,
                "arima_p" => cfg.arima.p_values = parse_list(key, value)?,
                "arima_q" => cfg.arima.q_values = parse_list(key, value)?,
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line: i + 1,
                        key: key.to_string(),
                    })
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.time_step == 0 {
            return bad("time_step must be positive");
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be positive");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction must lie strictly between 0 and 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.models.is_empty() {
            return bad("no models selected");
        }
        if self.models.contains(&ZooName::Arima) {
            self.arima
                .validate()
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let text = "\
# sample
data_path = data/prices.csv
time_step=5
train_fraction = 0.75
epochs = 3
seed = 7
models = gru, ARIMA ,bilstm, gru
arima_p = 0,1
arima_q = 1
output_dir = out
learning_rate = 0.01
";
        let cfg = BenchConfig::parse(text, Path::new("/base")).unwrap();
        assert_eq!(cfg.data_path.as_deref(), Some(Path::new("/base/data/prices.csv")));
        assert_eq!(cfg.time_step, 5);
        assert_eq!(cfg.epochs, 3);
        assert_eq!(cfg.models, [ZooName::BiLstm, ZooName::Arima, ZooName::Gru]);
        assert_eq!(cfg.arima.p_values, [0, 1]);
        assert_eq!(cfg.arima.q_values, [1]);
        assert_eq!(cfg.output_dir, Path::new("/base/out"));
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        let base = Path::new(".");
        assert!(matches!(BenchConfig::parse("epochs", base), Err(ConfigError::Syntax { line: 1 })));
        assert!(matches!(BenchConfig::parse("color = red", base), Err(ConfigError::UnknownKey { .. })));
        assert!(BenchConfig::parse("epochs = many", base).is_err());
        assert!(BenchConfig::parse("models = LSTM", base).is_err());
        let cfg = BenchConfig::parse("models =", base).unwrap();
        assert!(cfg.validate().is_err());
        let cfg = BenchConfig::parse("arima_p =", base).unwrap();
        assert!(cfg.validate().is_err());
        let cfg = BenchConfig::parse("train_fraction = 1", base).unwrap();
        assert!(cfg.validate().is_err());
    }
}
