//! Append-only newline-delimited JSON event log.
//!
//! Each line is `{"seq": n, "event": {...}}` with `seq` counting from 1.
//! A line is written with one `write_all` and flushed to disk before the
//! write is acknowledged. On open, a final line without its newline is a
//! write torn by a crash and is cut off; any other damage is an error.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::Event;
use crate::error::{OracleError, Result};

#[derive(Serialize, Deserialize)]
struct Entry {
    seq: u64,
    event: Event,
}

#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
    next_seq: u64,
}

impl EventLog {
    /// Opens (creating if needed) the log and returns it with every stored
    /// event in order.
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Vec<Event>)> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)?;
        let mut events = Vec::new();
        let mut good_len = 0u64;
        let mut reader = BufReader::new(&mut file);
        let mut line = String::new();
        let mut line_no = 0;
        loop {
            line.clear();
            let n = reader.read_line(&mut line)?;
            if n == 0 {
                break;
            }
            line_no += 1;
            if !line.ends_with('\n') {
                // torn tail; drop it below
                break;
            }
            let entry: Entry = serde_json::from_str(line.trim_end()).map_err(|e| OracleError::Corrupt {
                line: line_no,
                message: e.to_string(),
            })?;
            let expected = events.len() as u64 + 1;
            if entry.seq != expected {
                return Err(OracleError::Corrupt {
                    line: line_no,
                    message: format!("sequence {} where {expected} was expected", entry.seq),
                });
            }
            events.push(entry.event);
            good_len += n as u64;
        }
        drop(reader);
        if file.metadata()?.len() != good_len {
            file.set_len(good_len)?;
            file.sync_all()?;
        }
        file.seek(SeekFrom::End(0))?;
        let next_seq = events.len() as u64 + 1;
        Ok((Self { path, file, next_seq }, events))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> u64 {
        self.next_seq - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends one event durably.
    pub fn append(&mut self, event: &Event) -> Result<u64> {
        let seq = self.next_seq;
        let mut line = serde_json::to_vec(&Entry {
            seq,
            event: event.clone(),
        })
        .map_err(std::io::Error::other)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()?;
        self.next_seq += 1;
        Ok(seq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{DateTime, NaiveDate};

    fn ev(i: u32) -> Event {
        Event::PredictionResolved {
            symbol: "X".into(),
            date: NaiveDate::from_ymd_opt(2024, 1, i).unwrap(),
            actual_price: 100.0 + i as f64 / 3.0,
            at: DateTime::UNIX_EPOCH,
        }
    }

    #[test]
    fn append_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.ndjson");
        {
            let (mut log, events) = EventLog::open(&path).unwrap();
            assert!(events.is_empty());
            for i in 1..=3 {
                assert_eq!(log.append(&ev(i)).unwrap(), i as u64);
            }
        }
        let (mut log, events) = EventLog::open(&path).unwrap();
        assert_eq!(events, [ev(1), ev(2), ev(3)]);
        assert_eq!(log.append(&ev(4)).unwrap(), 4);
    }

    #[test]
    fn torn_tail_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.ndjson");
        {
            let (mut log, _) = EventLog::open(&path).unwrap();
            log.append(&ev(1)).unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"seq\":2,\"event\":{\"ty").unwrap();
        drop(f);
        let (mut log, events) = EventLog::open(&path).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(log.append(&ev(2)).unwrap(), 2);
        drop(log);
        assert_eq!(EventLog::open(&path).unwrap().1.len(), 2);
    }

    #[test]
    fn damaged_lines_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.ndjson");
        std::fs::write(&path, "not json\n").unwrap();
        assert!(matches!(EventLog::open(&path), Err(OracleError::Corrupt { line: 1, .. })));
        let line = serde_json::to_string(&Entry { seq: 5, event: ev(1) }).unwrap();
        std::fs::write(&path, line + "\n").unwrap();
        assert!(matches!(EventLog::open(&path), Err(OracleError::Corrupt { .. })));
    }
}
