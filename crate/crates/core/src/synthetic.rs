//! Deterministic synthetic price series for demos and tests.

use chrono::{Days, NaiveDate};

use crate::series::{PricePoint, PriceSeries, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineParams {
    pub level: f64,
    pub amplitude: f64,
    /// Period in points.
    pub period: f64,
}

impl Default for SineParams {
    fn default() -> Self {
        Self {
            level: 100.0,
            amplitude: 10.0,
            period: 25.0,
        }
    }
}

/// `level + amplitude * sin(2 pi i / period)` on consecutive calendar days
/// from `start`.
pub fn sine_series(symbol: &str, len: usize, start: NaiveDate, params: SineParams) -> Result<PriceSeries> {
    let points = (0..len)
        .map(|i| PricePoint {
            date: start + Days::new(i as u64),
            close: params.level
                + params.amplitude * (std::f64::consts::TAU * i as f64 / params.period).sin(),
        })
        .collect();
    PriceSeries::new(symbol, points)
}

/// The default 500-point sine series starting 2020-01-01.
pub fn default_sine() -> PriceSeries {
    let start = NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date");
    sine_series("SINE", 500, start, SineParams::default()).expect("positive sine series")
}

/// Writes a series as a `Date,Close` CSV.
pub fn write_csv<W: std::io::Write>(series: &PriceSeries, writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["Date", "Close"])?;
    for p in series.points() {
        w.write_record([p.date.to_string(), p.close.to_string()])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::read_csv;

    #[test]
    fn shape_and_period() {
        let s = default_sine();
        assert_eq!(s.len(), 500);
        let c = s.closes();
        assert_eq!(c[0], 100.0);
        assert!((c[25] - 100.0).abs() < 1e-9);
        assert!(c.iter().all(|&v| (90.0..=110.0).contains(&v)));
    }

    #[test]
    fn csv_round_trip() {
        let s = default_sine();
        let mut buf = Vec::new();
        write_csv(&s, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), "SINE").unwrap();
        assert_eq!(back, s);
    }
}
