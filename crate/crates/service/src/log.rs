//! Append-only session logs and log replay.
//!
//! A log starts with a `session_start` record carrying everything needed to
//! rebuild the session (seed, config, starting profile), followed by the
//! client events and non-empty ticks with their wall timestamps, interleaved
//! with the server events they produced. Each record is one JSON line written
//! with a single `write` call, so a crash can only tear the final line.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use moles_core::{Catalog, LearnerProfile};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::GameConfig;
use crate::driver::Driver;
use crate::protocol::SessionEvent;
use crate::session::{SessionError, WallMillis};
use crate::store::StoreError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case", deny_unknown_fields)]
pub enum LogRecord {
    SessionStart {
        session_id: String,
        player_id: String,
        seed: u64,
        at: WallMillis,
        config: GameConfig,
        profile: LearnerProfile,
    },
    Client {
        at: WallMillis,
        event: SessionEvent,
    },
    /// A client line that did not parse as a client event.
    Rejected {
        at: WallMillis,
        line: String,
    },
    Tick {
        at: WallMillis,
    },
    Server {
        event: SessionEvent,
    },
}

#[derive(Debug)]
pub struct SessionLog {
    path: PathBuf,
    file: File,
}

impl SessionLog {
    pub fn create(path: impl Into<PathBuf>) -> Result<SessionLog, StoreError> {
        let path = path.into();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| StoreError::io(&path, e))?;
        Ok(SessionLog { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, record: &LogRecord) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(record).expect("log records always serialize");
        line.push(b'\n');
        self.file
            .write_all(&line)
            .map_err(|e| StoreError::io(&self.path, e))
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("log does not start with a session_start record")]
    MissingStart,
    #[error("line {line}: unexpected second session_start record")]
    DuplicateStart { line: usize },
    #[error("rebuilding session: {0}")]
    Session(#[from] SessionError),
}

/// Parses log text. A final line without its newline is a torn write and is
/// dropped; any other unparsable line is an error.
pub fn parse_log(text: &str) -> Result<Vec<LogRecord>, LogError> {
    let complete = match text.rfind('\n') {
        Some(end) => &text[..=end],
        None => "",
    };
    complete
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| LogError::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_log(path: &Path) -> Result<Vec<LogRecord>, LogError> {
    let text = std::fs::read_to_string(path).map_err(|source| LogError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_log(&text)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub final_score: u64,
    /// Server events recorded in the log, in order.
    pub recorded: Vec<SessionEvent>,
    /// Server events produced by the replay, in order.
    pub replayed: Vec<SessionEvent>,
}

impl ReplayOutcome {
    pub fn matches(&self) -> bool {
        self.recorded == self.replayed
    }

    /// Final score according to the last snapshot in the recording.
    pub fn recorded_score(&self) -> Option<u64> {
        self.recorded.iter().rev().find_map(|e| match e {
            SessionEvent::StateSnapshot { snapshot } => Some(snapshot.score),
            _ => None,
        })
    }
}

/// Rebuilds a session from its start record and feeds it every recorded
/// input, without touching any storage.
pub fn replay(records: &[LogRecord], catalog: Arc<Catalog>) -> Result<ReplayOutcome, LogError> {
    let mut iter = records.iter().enumerate();
    let Some((
        _,
        LogRecord::SessionStart {
            session_id,
            seed,
            at,
            config,
            profile,
            ..
        },
    )) = iter.next()
    else {
        return Err(LogError::MissingStart);
    };
    let (mut driver, mut replayed) = Driver::new(
        session_id.clone(),
        profile.clone(),
        catalog,
        config.clone(),
        *seed,
        *at,
        None,
        None,
    )?;
    let mut recorded = Vec::new();
    for (i, record) in iter {
        match record {
            LogRecord::SessionStart { .. } => return Err(LogError::DuplicateStart { line: i + 1 }),
            LogRecord::Client { at, event } => replayed.extend(driver.client_event(event, *at)),
            LogRecord::Rejected { at, line } => replayed.extend(driver.client_line(line, *at)),
            LogRecord::Tick { at } => replayed.extend(driver.tick(*at)),
            LogRecord::Server { event } => recorded.push(event.clone()),
        }
    }
    Ok(ReplayOutcome {
        final_score: driver.session().score(),
        recorded,
        replayed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torn_final_line_is_dropped() {
        let text = "{\"record\":\"tick\",\"at\":5}\n{\"record\":\"tick\",\"at\":";
        assert_eq!(parse_log(text).unwrap(), vec![LogRecord::Tick { at: 5 }]);
        assert!(matches!(
            parse_log("garbage\n"),
            Err(LogError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            replay(&[], Arc::new(sample())),
            Err(LogError::MissingStart)
        ));
    }

    fn sample() -> Catalog {
        moles_core::load_catalog(br#"{"lists":[{"id":"a","name":"A","level":1,"words":["cat"]}]}"#)
            .unwrap()
    }

    #[test]
    fn append_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log");
        SessionLog::create(&path)
            .unwrap()
            .append(&LogRecord::Tick { at: 1 })
            .unwrap();
        SessionLog::create(&path)
            .unwrap()
            .append(&LogRecord::Tick { at: 2 })
            .unwrap();
        assert_eq!(
            read_log(&path).unwrap(),
            vec![LogRecord::Tick { at: 1 }, LogRecord::Tick { at: 2 }]
        );
    }
}
