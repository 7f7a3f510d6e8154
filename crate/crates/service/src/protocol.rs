//! Wire protocol: one JSON object per line, tagged by `"type"`.
//!
//! Client to server: `key_hit`, `replay`, `whack`, `pause`, `resume`, `quit`.
//! Server to client: `effect`, `state_snapshot`, `round_result`,
//! `bonus_start`, `bonus_end`, `error`. Unknown types and unknown fields are
//! rejected.

use moles_core::{Effect, Letter, LetterPhase, RoundResult, Spawn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SessionEvent {
    KeyHit { letter: Letter },
    Replay {},
    Whack { cell: usize },
    Pause {},
    Resume {},
    Quit {},

    Effect { effect: Effect },
    StateSnapshot { snapshot: Snapshot },
    RoundResult { result: RoundResult },
    BonusStart { bonus: BonusAnnouncement },
    BonusEnd { points: u32 },
    Error { code: ErrorCode, message: String },
}

impl SessionEvent {
    pub fn is_client_event(&self) -> bool {
        matches!(
            self,
            SessionEvent::KeyHit { .. }
                | SessionEvent::Replay {}
                | SessionEvent::Whack { .. }
                | SessionEvent::Pause {}
                | SessionEvent::Resume {}
                | SessionEvent::Quit {}
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            SessionEvent::KeyHit { .. } => "key_hit",
            SessionEvent::Replay {} => "replay",
            SessionEvent::Whack { .. } => "whack",
            SessionEvent::Pause {} => "pause",
            SessionEvent::Resume {} => "resume",
            SessionEvent::Quit {} => "quit",
            SessionEvent::Effect { .. } => "effect",
            SessionEvent::StateSnapshot { .. } => "state_snapshot",
            SessionEvent::RoundResult { .. } => "round_result",
            SessionEvent::BonusStart { .. } => "bonus_start",
            SessionEvent::BonusEnd { .. } => "bonus_end",
            SessionEvent::Error { .. } => "error",
        }
    }

    pub fn error(code: ErrorCode, message: impl Into<String>) -> SessionEvent {
        SessionEvent::Error {
            code,
            message: message.into(),
        }
    }

    /// Serializes to a single line, without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("session events always serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    MalformedMessage,
    UnexpectedEvent,
    EventNotAllowedInMode,
    SessionQuit,
    InvalidInput,
    Internal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Idle,
    Spelling,
    Bonus,
    Paused,
    Ended,
}

/// Read-only view of a session, enough for a client to redraw everything.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub session_id: String,
    pub player_id: String,
    pub score: u64,
    pub streak: u32,
    pub level: u32,
    pub mode: ModeName,
    pub clock_ms: u64,
    pub round: Option<RoundView>,
    pub bonus: Option<BonusView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundView {
    pub word_len: usize,
    pub typed: String,
    pub phase: LetterPhase,
    pub points: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BonusView {
    pub hits: usize,
    pub points: u32,
    pub elapsed_ms: u64,
    pub remaining_ms: u64,
}

/// Sent with `bonus_start`; spawn offsets are relative to the bonus start.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BonusAnnouncement {
    pub grid_cells: usize,
    pub duration_ms: u64,
    pub visible_ms: u64,
    pub points_per_whack: u32,
    pub spawns: Vec<Spawn>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("{0} is a server event and cannot be sent by a client")]
    ServerEvent(&'static str),
}

impl ProtocolError {
    pub fn to_event(&self) -> SessionEvent {
        let code = match self {
            ProtocolError::Malformed(_) => ErrorCode::MalformedMessage,
            ProtocolError::ServerEvent(_) => ErrorCode::UnexpectedEvent,
        };
        SessionEvent::error(code, self.to_string())
    }
}

pub fn parse_event(line: &str) -> Result<SessionEvent, ProtocolError> {
    serde_json::from_str(line.trim()).map_err(|e| ProtocolError::Malformed(e.to_string()))
}

/// Parses a line received from a client, rejecting server-only variants.
pub fn parse_client_event(line: &str) -> Result<SessionEvent, ProtocolError> {
    let event = parse_event(line)?;
    if event.is_client_event() {
        Ok(event)
    } else {
        Err(ProtocolError::ServerEvent(event.name()))
    }
}

/// Splits a chunk of the stream into its non-blank lines.
pub fn lines(chunk: &str) -> impl Iterator<Item = &str> {
    chunk.lines().map(str::trim).filter(|l| !l.is_empty())
}
