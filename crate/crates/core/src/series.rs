//! Price series ingestion, chronological splitting, min-max scaling and
//! sliding-window dataset construction.

use std::collections::HashSet;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV at row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error("missing required column `{0}`")]
    MissingColumn(&'static str),
    #[error("row {row}: cannot parse date {value:?} (expected YYYY-MM-DD)")]
    BadDate { row: usize, value: String },
    #[error("row {row}: cannot parse close {value:?}")]
    BadNumber { row: usize, value: String },
    #[error("row {row}: close must be finite and positive, got {value}")]
    NonPositive { row: usize, value: f64 },
    #[error("row {row}: duplicate date {date}")]
    DuplicateDate { row: usize, date: NaiveDate },
    #[error("series has no data rows")]
    Empty,
    #[error("dates must be strictly increasing ({prev} then {next})")]
    Unordered { prev: NaiveDate, next: NaiveDate },
    #[error("train fraction {fraction} leaves an empty side for a series of {len} points")]
    EmptySplit { len: usize, fraction: f64 },
    #[error("constant series cannot be min-max scaled (min = max = {0})")]
    Degenerate(f64),
    #[error("need at least {required} values, got {actual}")]
    TooShort { required: usize, actual: usize },
    #[error("time_step must be positive")]
    ZeroTimeStep,
}

pub type Result<T> = std::result::Result<T, SeriesError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub date: NaiveDate,
    pub close: f64,
}

/// Ordered daily closes for one symbol.
///
/// Dates are strictly increasing and every close is finite and positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    symbol: String,
    points: Vec<PricePoint>,
}

impl PriceSeries {
    /// Builds a series from points in any order. Points are sorted by date.
    pub fn new(symbol: impl Into<String>, mut points: Vec<PricePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(SeriesError::Empty);
        }
        for (i, p) in points.iter().enumerate() {
            if !p.close.is_finite() || p.close <= 0.0 {
                return Err(SeriesError::NonPositive {
                    row: i + 1,
                    value: p.close,
                });
            }
        }
        points.sort_by_key(|p| p.date);
        for w in points.windows(2) {
            if w[0].date >= w[1].date {
                return Err(SeriesError::Unordered {
                    prev: w[0].date,
                    next: w[1].date,
                });
            }
        }
        Ok(Self {
            symbol: symbol.into(),
            points,
        })
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn points(&self) -> &[PricePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.close).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.points.iter().map(|p| p.date).collect()
    }

    pub fn last(&self) -> &PricePoint {
        // non-empty by construction
        self.points.last().expect("non-empty series")
    }

    /// Splits chronologically: the first `floor(len * train_fraction)` points
    /// train, the remainder test.
    pub fn chrono_split(&self, train_fraction: f64) -> Result<(PriceSeries, PriceSeries)> {
        let len = self.points.len();
        let empty = || SeriesError::EmptySplit {
            len,
            fraction: train_fraction,
        };
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(empty());
        }
        let cut = (len as f64 * train_fraction).floor() as usize;
        if cut == 0 || cut >= len {
            return Err(empty());
        }
        let (a, b) = self.points.split_at(cut);
        Ok((
            PriceSeries {
                symbol: self.symbol.clone(),
                points: a.to_vec(),
            },
            PriceSeries {
                symbol: self.symbol.clone(),
                points: b.to_vec(),
            },
        ))
    }
}

fn symbol_from_path(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Loads a `date,close` CSV (extra columns ignored). The symbol is taken
/// from the file stem.
pub fn load_csv(path: impl AsRef<Path>) -> Result<PriceSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| SeriesError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, symbol_from_path(path))
}

/// Parses CSV text from any reader. Row numbers in errors are 1-based data
/// rows (the header is row 0).
pub fn read_csv<R: std::io::Read>(reader: R, symbol: impl Into<String>) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| SeriesError::Csv {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let find = |name: &'static str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}').eq_ignore_ascii_case(name))
            .ok_or(SeriesError::MissingColumn(name))
    };
    let date_col = find("date")?;
    let close_col = find("close")?;

    let mut points = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| SeriesError::Csv {
            row,
            message: e.to_string(),
        })?;
        let raw_date = record.get(date_col).unwrap_or("");
        let raw_close = record.get(close_col).unwrap_or("");
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d").map_err(|_| {
            SeriesError::BadDate {
                row,
                value: raw_date.to_string(),
            }
        })?;
        let close: f64 = raw_close.parse().map_err(|_| SeriesError::BadNumber {
            row,
            value: raw_close.to_string(),
        })?;
        if !close.is_finite() || close <= 0.0 {
            return Err(SeriesError::NonPositive { row, value: close });
        }
        if !seen.insert(date) {
            return Err(SeriesError::DuplicateDate { row, date });
        }
        points.push(PricePoint { date, close });
    }
    if points.is_empty() {
        return Err(SeriesError::Empty);
    }
    PriceSeries::new(symbol, points)
}

/// Min-max scaling bounds, always with `max > min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    min: f64,
    max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleDirection {
    Forward,
    Inverse,
}

impl ScalerParams {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || max <= min {
            return Err(SeriesError::Degenerate(min));
        }
        Ok(Self { min, max })
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn forward(&self, v: f64) -> f64 {
        (v - self.min) / (self.max - self.min)
    }

    pub fn inverse(&self, u: f64) -> f64 {
        u * (self.max - self.min) + self.min
    }

    /// Maps every value; out-of-range inputs are not clamped.
    pub fn apply(&self, values: &[f64], direction: ScaleDirection) -> Vec<f64> {
        match direction {
            ScaleDirection::Forward => values.iter().map(|&v| self.forward(v)).collect(),
            ScaleDirection::Inverse => values.iter().map(|&u| self.inverse(u)).collect(),
        }
    }
}

/// Fits min-max bounds on a slice of values (train data only in pipelines).
pub fn fit_minmax_values(values: &[f64]) -> Result<ScalerParams> {
    if values.len() < 2 {
        return Err(SeriesError::TooShort {
            required: 2,
            actual: values.len(),
        });
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ScalerParams::new(min, max)
}

pub fn fit_minmax(series: &PriceSeries) -> Result<ScalerParams> {
    fit_minmax_values(&series.closes())
}

/// Sliding-window supervised pairs: `inputs[i]` holds `time_step` lagged
/// values and `targets[i]` the value that follows them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedDataset {
    time_step: usize,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl WindowedDataset {
    pub fn time_step(&self) -> usize {
        self.time_step
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.inputs
            .iter()
            .map(Vec::as_slice)
            .zip(self.targets.iter().copied())
    }
}

pub fn make_windows(values: &[f64], time_step: usize) -> Result<WindowedDataset> {
    if time_step == 0 {
        return Err(SeriesError::ZeroTimeStep);
    }
    if values.len() <= time_step {
        return Err(SeriesError::TooShort {
            required: time_step + 1,
            actual: values.len(),
        });
    }
    let (inputs, targets) = values
        .windows(time_step + 1)
        .map(|w| (w[..time_step].to_vec(), w[time_step]))
        .unzip();
    Ok(WindowedDataset {
        time_step,
        inputs,
        targets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn series(closes: &[f64]) -> PriceSeries {
        let start = d("2023-01-02");
        let points = closes
            .iter()
            .enumerate()
            .map(|(i, &close)| PricePoint {
                date: start + chrono::Days::new(i as u64),
                close,
            })
            .collect();
        PriceSeries::new("T", points).unwrap()
    }

    #[test]
    fn reads_well_formed_csv() {
        let csv = "date,open,close,volume\n2023-01-02,1,100,5\n2023-01-03,1,101,5\n2023-01-04,1,102,5\n";
        let s = read_csv(csv.as_bytes(), "NIFTY").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.points()[0].close, 100.0);
        assert_eq!(s.symbol(), "NIFTY");
    }

    #[test]
    fn sorts_rows_given_out_of_order() {
        let csv = "date,close\n2023-01-03,101\n2023-01-02,100\n2023-01-04,102\n";
        let s = read_csv(csv.as_bytes(), "X").unwrap();
        assert_eq!(s.closes(), vec![100.0, 101.0, 102.0]);
        assert_eq!(s.points()[0].date, d("2023-01-02"));
    }

    #[test]
    fn bad_close_names_the_row() {
        let csv = "date,close\n2023-01-02,100\n2023-01-03,abc\n";
        match read_csv(csv.as_bytes(), "X") {
            Err(SeriesError::BadNumber { row, value }) => {
                assert_eq!(row, 2);
                assert_eq!(value, "abc");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_error_cases() {
        assert!(matches!(
            read_csv("date,open\n2023-01-02,1\n".as_bytes(), "X"),
            Err(SeriesError::MissingColumn("close"))
        ));
        assert!(matches!(
            read_csv("date,close\n".as_bytes(), "X"),
            Err(SeriesError::Empty)
        ));
        assert!(matches!(
            read_csv("date,close\n02/01/2023,1\n".as_bytes(), "X"),
            Err(SeriesError::BadDate { row: 1, .. })
        ));
        assert!(matches!(
            read_csv("date,close\n2023-01-02,1\n2023-01-02,2\n".as_bytes(), "X"),
            Err(SeriesError::DuplicateDate { row: 2, .. })
        ));
        assert!(matches!(
            read_csv("date,close\n2023-01-02,-1\n".as_bytes(), "X"),
            Err(SeriesError::NonPositive { row: 1, .. })
        ));
    }

    #[test]
    fn split_floor_arithmetic() {
        let s = series(&[1., 2., 3., 4., 5., 6., 7., 8., 9., 10.]);
        let (a, b) = s.chrono_split(0.8).unwrap();
        assert_eq!((a.len(), b.len()), (8, 2));
        assert!(s.chrono_split(0.05).is_err());
        assert!(s.chrono_split(1.0).is_err());

        let s = series(&[1., 2., 3., 4., 5.]);
        let (a, b) = s.chrono_split(0.8).unwrap();
        assert_eq!(a.closes(), vec![1., 2., 3., 4.]);
        assert_eq!(b.closes(), vec![5.]);
    }

    #[test]
    fn minmax_fit() {
        let p = fit_minmax(&series(&[100., 200., 150.])).unwrap();
        assert_eq!((p.min(), p.max()), (100.0, 200.0));
        assert!(matches!(
            fit_minmax(&series(&[5., 5., 5.])),
            Err(SeriesError::Degenerate(_))
        ));
        let p = fit_minmax(&series(&[1., 3.])).unwrap();
        assert_eq!((p.min(), p.max()), (1.0, 3.0));
    }

    #[test]
    fn minmax_apply() {
        let p = ScalerParams::new(100.0, 200.0).unwrap();
        assert_eq!(p.apply(&[150.0], ScaleDirection::Forward), vec![0.5]);
        assert_eq!(p.apply(&[0.5], ScaleDirection::Inverse), vec![150.0]);
        assert_eq!(p.apply(&[250.0], ScaleDirection::Forward), vec![1.5]);
    }

    #[test]
    fn windows_definition() {
        let w = make_windows(&[1., 2., 3., 4., 5.], 3).unwrap();
        assert_eq!(w.inputs(), &[vec![1., 2., 3.], vec![2., 3., 4.]]);
        assert_eq!(w.targets(), &[4., 5.]);
        assert!(make_windows(&[1., 2.], 3).is_err());
        assert!(make_windows(&[1., 2.], 0).is_err());
        let w = make_windows(&[7., 7., 7., 7.], 2).unwrap();
        assert_eq!(w.len(), 2);
        assert!(w.targets().iter().all(|&t| t == 7.0));
    }
}
