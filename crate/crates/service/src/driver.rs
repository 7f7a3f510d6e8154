//! Glue between a [`Session`] and its side effects: the session log and the
//! profile store. Servers, the simulator and log replay all go through here,
//! so they process events identically.

use std::sync::Arc;

use moles_core::{Catalog, LearnerProfile};

use crate::config::GameConfig;
use crate::log::{LogRecord, SessionLog};
use crate::protocol::{parse_client_event, SessionEvent};
use crate::session::{Session, SessionError, WallMillis};
use crate::store::{Store, StoreError};

#[derive(Debug)]
pub struct Driver {
    session: Session,
    start_record: LogRecord,
    initial_events: Vec<SessionEvent>,
    log: Option<SessionLog>,
    store: Option<Arc<Store>>,
}

impl Driver {
    /// Starts a session. Provide a log and store to record and persist it.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        session_id: String,
        profile: LearnerProfile,
        catalog: Arc<Catalog>,
        config: GameConfig,
        seed: u64,
        now: WallMillis,
        log: Option<SessionLog>,
        store: Option<Arc<Store>>,
    ) -> Result<(Driver, Vec<SessionEvent>), SessionError> {
        let start_record = LogRecord::SessionStart {
            session_id: session_id.clone(),
            player_id: profile.player_id.clone(),
            seed,
            at: now,
            config: config.clone(),
            profile: profile.clone(),
        };
        let (session, events) = Session::new(session_id, profile, catalog, config, seed, now)?;
        let mut driver = Driver {
            session,
            start_record,
            initial_events: events.clone(),
            log: None,
            store,
        };
        if let Some(log) = log {
            driver.attach_log(log);
        }
        Ok((driver, events))
    }

    /// Starts recording to `log`, writing the session header and the events
    /// produced at creation.
    pub fn attach_log(&mut self, log: SessionLog) {
        self.log = Some(log);
        let header = self.start_record.clone();
        self.write(&header);
        for event in self.initial_events.clone() {
            self.write(&LogRecord::Server { event });
        }
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    /// Events produced when the session was created (first word, snapshot).
    pub fn initial_events(&self) -> &[SessionEvent] {
        &self.initial_events
    }

    pub fn log_path(&self) -> Option<&std::path::Path> {
        self.log.as_ref().map(SessionLog::path)
    }

    /// Handles a parsed client event; failures become `error` events.
    pub fn client_event(&mut self, event: &SessionEvent, now: WallMillis) -> Vec<SessionEvent> {
        self.write(&LogRecord::Client {
            at: now,
            event: event.clone(),
        });
        let out = self
            .session
            .handle_event(event, now)
            .unwrap_or_else(|e| vec![e.to_event()]);
        self.record(&out, matches!(event, SessionEvent::Quit {}));
        out
    }

    /// Handles one raw line from the client stream.
    pub fn client_line(&mut self, line: &str, now: WallMillis) -> Vec<SessionEvent> {
        match parse_client_event(line) {
            Ok(event) => self.client_event(&event, now),
            Err(err) => {
                self.write(&LogRecord::Rejected {
                    at: now,
                    line: line.to_owned(),
                });
                let out = vec![err.to_event()];
                self.record(&out, false);
                out
            }
        }
    }

    pub fn tick(&mut self, now: WallMillis) -> Vec<SessionEvent> {
        let out = self
            .session
            .tick_session(now)
            .unwrap_or_else(|e| vec![e.to_event()]);
        if !out.is_empty() {
            self.write(&LogRecord::Tick { at: now });
            self.record(&out, false);
        }
        out
    }

    fn record(&mut self, out: &[SessionEvent], force_persist: bool) {
        for event in out {
            self.write(&LogRecord::Server {
                event: event.clone(),
            });
        }
        let round_done = out
            .iter()
            .any(|e| matches!(e, SessionEvent::RoundResult { .. }));
        if round_done || force_persist {
            self.persist();
        }
    }

    pub fn persist(&self) {
        if let Some(store) = &self.store {
            if let Err(e) = store.persist_profile(self.session.player()) {
                tracing::error!(player = %self.session.player().player_id, "saving profile: {e}");
            }
        }
    }

    fn write(&mut self, record: &LogRecord) {
        if let Some(log) = &mut self.log {
            if let Err(e) = log.append(record) {
                tracing::error!(session = %self.session.session_id(), "writing session log: {e}");
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CreateError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Session(#[from] SessionError),
}

/// Loads (or creates) the player's profile and starts a logged, persisted
/// session with a fresh id.
pub fn create_session(
    store: &Arc<Store>,
    player_id: &str,
    catalog: Arc<Catalog>,
    config: GameConfig,
    seed: u64,
    now: WallMillis,
) -> Result<(Driver, Vec<SessionEvent>), CreateError> {
    let profile = store.load_profile(player_id, &config.level)?;
    let session_id = uuid::Uuid::new_v4().simple().to_string();
    let log = store.create_log(&session_id)?;
    Ok(Driver::new(
        session_id,
        profile,
        catalog,
        config,
        seed,
        now,
        Some(log),
        Some(store.clone()),
    )?)
}
