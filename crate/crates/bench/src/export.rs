//! Score table and per-model prediction files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use marketcast_core::checkpoint::Checkpoint;
use marketcast_core::zoo::ZooName;

use crate::pipeline::{BenchError, PredictionRow, RunReport, Split};

pub const SCORES_FILE: &str = "scores.csv";
pub const SCORES_HEADER: [&str; 6] = [
    "model",
    "train_rmse",
    "test_rmse",
    "train_mae",
    "test_mae",
    "train_seconds",
];

pub fn predictions_file(name: ZooName) -> String {
    format!("pred_{name}.csv")
}

pub fn checkpoint_file(name: ZooName) -> String {
    format!("ckpt_{name}.json")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `bytes` next to `path` and renames into place so readers never
/// see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), BenchError> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn csv_bytes<F>(fill: F) -> Result<Vec<u8>, BenchError>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<(), csv::Error>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        fill(&mut w)?;
        w.flush().map_err(csv::Error::from)?;
    }
    Ok(buf)
}

/// The score table as CSV text. Metrics use shortest round-trip float
/// formatting; failed models keep their row with empty fields.
pub fn scores_csv(report: &RunReport) -> Result<Vec<u8>, BenchError> {
    csv_bytes(|w| {
        w.write_record(SCORES_HEADER)?;
        for outcome in &report.outcomes {
            let row = match &outcome.result {
                Ok(run) => vec![
                    run.name.to_string(),
                    run.train.rmse.to_string(),
                    run.test.rmse.to_string(),
                    run.train.mae.to_string(),
                    run.test.mae.to_string(),
                    format!("{:.6}", run.train_seconds),
                ],
                Err(_) => {
                    let mut r = vec![outcome.name.to_string()];
                    r.extend(std::iter::repeat_n(String::new(), 5));
                    r
                }
            };
            w.write_record(&row)?;
        }
        Ok(())
    })
}

pub fn predictions_csv(rows: &[PredictionRow]) -> Result<Vec<u8>, BenchError> {
    csv_bytes(|w| {
        w.write_record(["date", "split", "actual", "predicted"])?;
        for r in rows {
            w.write_record([
                r.date.to_string(),
                r.split.as_str().to_string(),
                r.actual.to_string(),
                r.predicted.to_string(),
            ])?;
        }
        Ok(())
    })
}

/// Writes `scores.csv`, one prediction file and one checkpoint per
/// successful model. Returns the paths written.
pub fn export(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for run in report.outcomes.iter().filter_map(|o| o.result.as_ref().ok()) {
        let path = dir.join(predictions_file(run.name));
        write_atomic(&path, &predictions_csv(&run.predictions)?)?;
        written.push(path);
        let path = dir.join(checkpoint_file(run.name));
        let json = Checkpoint::new(run.saved.clone())
            .to_json()
            .map_err(|e| BenchError::Io {
                path: path.display().to_string(),
                source: std::io::Error::other(e.to_string()),
            })?;
        write_atomic(&path, json.as_bytes())?;
        written.push(path);
    }
    let path = dir.join(SCORES_FILE);
    write_atomic(&path, &scores_csv(report)?)?;
    written.push(path);
    Ok(written)
}

/// Reads a prediction file back into (split, actual, predicted) triples.
pub fn read_predictions(path: &Path) -> Result<Vec<(Split, f64, f64)>, BenchError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let bad = || BenchError::Io {
            path: path.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, format!("bad row {rec:?}")),
        };
        let split = match &rec[1] {
            "train" => Split::Train,
            "test" => Split::Test,
            _ => return Err(bad()),
        };
        let actual = rec[2].parse().map_err(|_| bad())?;
        let predicted = rec[3].parse().map_err(|_| bad())?;
        out.push((split, actual, predicted));
    }
    Ok(out)
}
