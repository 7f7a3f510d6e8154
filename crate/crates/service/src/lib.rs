//! Session service for the spelling game: orchestration, wire protocol,
//! persistence, session logs with replay, a headless simulated learner and
//! the HTTP/WebSocket server.

pub mod config;
pub mod driver;
pub mod log;
pub mod protocol;
pub mod server;
pub mod session;
pub mod simulate;
pub mod store;

pub use config::GameConfig;
pub use driver::{create_session, Driver};
pub use protocol::{parse_client_event, parse_event, SessionEvent};
pub use session::{Mode, Session, SessionError};
pub use simulate::{simulate, SimParams, SimSummary};
pub use store::Store;

/// Word lists bundled with the service, used when no word-list file is given.
pub const SAMPLE_WORDLIST: &str = include_str!("../data/sample_wordlist.json");

pub fn sample_catalog() -> moles_core::Catalog {
    moles_core::load_catalog(SAMPLE_WORDLIST.as_bytes()).expect("bundled word list is valid")
}
