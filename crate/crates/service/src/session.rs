//! Session orchestration: rounds, score meter, streaks, bonus and pause.
//!
//! A session turns wall-clock timestamps into an active clock that stops while
//! paused, and feeds that clock to the round and bonus engines. All input is a
//! `(event, wall time)` pair, so a session is replayable from its event log.

use std::sync::Arc;

use moles_core::learning::LevelChange;
use moles_core::round::seeded_rng;
use moles_core::{
    start_bonus, start_round, BonusState, Catalog, Effect, GameRng, LearnerProfile, LearningError,
    RoundResult, RoundState,
};
use rand::RngCore;
use thiserror::Error;

use crate::config::GameConfig;
use crate::protocol::{
    BonusAnnouncement, BonusView, ErrorCode, ModeName, RoundView, SessionEvent, Snapshot,
};

/// Wall time in milliseconds.
pub type WallMillis = u64;

/// Active play time: wall time since the session started, minus paused
/// intervals. Wall timestamps that go backwards are treated as "no time
/// passed".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveClock {
    origin: WallMillis,
    last_wall: WallMillis,
    paused_total: u64,
    paused_since: Option<WallMillis>,
}

impl ActiveClock {
    pub fn new(origin: WallMillis) -> Self {
        ActiveClock {
            origin,
            last_wall: origin,
            paused_total: 0,
            paused_since: None,
        }
    }

    /// Records a wall timestamp and returns the active time at that instant.
    pub fn observe(&mut self, wall: WallMillis) -> u64 {
        self.last_wall = self.last_wall.max(wall);
        self.active()
    }

    /// Active time at the latest observed wall timestamp.
    pub fn active(&self) -> u64 {
        let paused_now = self.paused_since.map_or(0, |since| self.last_wall - since);
        self.last_wall - self.origin - self.paused_total - paused_now
    }

    /// Active time at wall time `wall` without recording it.
    pub fn active_at(&self, wall: WallMillis) -> u64 {
        let mut probe = self.clone();
        probe.observe(wall)
    }

    pub fn is_paused(&self) -> bool {
        self.paused_since.is_some()
    }

    pub fn pause(&mut self, wall: WallMillis) {
        self.observe(wall);
        if self.paused_since.is_none() {
            self.paused_since = Some(self.last_wall);
        }
    }

    pub fn resume(&mut self, wall: WallMillis) {
        self.observe(wall);
        if let Some(since) = self.paused_since.take() {
            self.paused_total += self.last_wall - since;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)] // one per session
pub enum Mode {
    Idle,
    Spelling(RoundState),
    Bonus(BonusState),
    Paused { prior: Box<Mode>, since: WallMillis },
}

impl Mode {
    pub fn name(&self) -> ModeName {
        match self {
            Mode::Idle => ModeName::Idle,
            Mode::Spelling(_) => ModeName::Spelling,
            Mode::Bonus(_) => ModeName::Bonus,
            Mode::Paused { .. } => ModeName::Paused,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("{event} is not allowed while the session is {mode:?}")]
    EventNotAllowedInMode { event: &'static str, mode: ModeName },
    #[error("the session has been quit")]
    SessionQuit,
    #[error("{0} is a server event")]
    UnexpectedEvent(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Learning(#[from] LearningError),
}

impl SessionError {
    pub fn code(&self) -> ErrorCode {
        match self {
            SessionError::EventNotAllowedInMode { .. } => ErrorCode::EventNotAllowedInMode,
            SessionError::SessionQuit => ErrorCode::SessionQuit,
            SessionError::UnexpectedEvent(_) => ErrorCode::UnexpectedEvent,
            SessionError::InvalidInput(_) => ErrorCode::InvalidInput,
            SessionError::Learning(_) => ErrorCode::Internal,
        }
    }

    pub fn to_event(&self) -> SessionEvent {
        SessionEvent::error(self.code(), self.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    session_id: String,
    player: LearnerProfile,
    catalog: Arc<Catalog>,
    config: GameConfig,
    score: u64,
    streak: u32,
    mode: Mode,
    seed: u64,
    seeds: GameRng,
    clock: ActiveClock,
    rounds_completed: u64,
    bonus_rounds: u64,
    last_level_change: LevelChange,
    quit: bool,
}

impl Session {
    /// Creates a session and immediately starts its first round. Returns the
    /// session together with the events announcing that round.
    pub fn new(
        session_id: impl Into<String>,
        mut player: LearnerProfile,
        catalog: Arc<Catalog>,
        config: GameConfig,
        seed: u64,
        now: WallMillis,
    ) -> Result<(Session, Vec<SessionEvent>), SessionError> {
        let max_level = catalog.max_level();
        let level = &mut player.controller.current_level;
        *level = (*level).clamp(1, max_level);

        let mut session = Session {
            session_id: session_id.into(),
            player,
            catalog,
            config,
            score: 0,
            streak: 0,
            mode: Mode::Idle,
            seed,
            seeds: seeded_rng(seed),
            clock: ActiveClock::new(now),
            rounds_completed: 0,
            bonus_rounds: 0,
            last_level_change: LevelChange::Unchanged,
            quit: false,
        };
        let mut out = Vec::new();
        session.start_next_round(0, &mut out)?;
        out.push(session.snapshot_event());
        Ok((session, out))
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn player(&self) -> &LearnerProfile {
        &self.player
    }

    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn score(&self) -> u64 {
        self.score
    }

    pub fn streak(&self) -> u32 {
        self.streak
    }

    pub fn mode(&self) -> &Mode {
        &self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn clock(&self) -> &ActiveClock {
        &self.clock
    }

    pub fn rounds_completed(&self) -> u64 {
        self.rounds_completed
    }

    pub fn bonus_rounds(&self) -> u64 {
        self.bonus_rounds
    }

    pub fn last_level_change(&self) -> LevelChange {
        self.last_level_change
    }

    pub fn is_quit(&self) -> bool {
        self.quit
    }

    /// The running round, if the session is spelling (not paused).
    pub fn round(&self) -> Option<&RoundState> {
        match &self.mode {
            Mode::Spelling(round) => Some(round),
            _ => None,
        }
    }

    pub fn bonus(&self) -> Option<&BonusState> {
        match &self.mode {
            Mode::Bonus(bonus) => Some(bonus),
            _ => None,
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        let active = self.clock.active();
        let visible = match &self.mode {
            Mode::Paused { prior, .. } => prior.as_ref(),
            other => other,
        };
        let round = match visible {
            Mode::Spelling(r) => Some(RoundView {
                word_len: r.word().len(),
                typed: r.typed().to_owned(),
                phase: r.phase().clone(),
                points: r.points(),
            }),
            _ => None,
        };
        let bonus = match visible {
            Mode::Bonus(b) => {
                let elapsed = active.saturating_sub(b.start());
                Some(BonusView {
                    hits: b.hits().len(),
                    points: b.points(),
                    elapsed_ms: elapsed,
                    remaining_ms: b.config().duration_ms.saturating_sub(elapsed),
                })
            }
            _ => None,
        };
        Snapshot {
            session_id: self.session_id.clone(),
            player_id: self.player.player_id.clone(),
            score: self.score,
            streak: self.streak,
            level: self.player.level(),
            mode: if self.quit {
                ModeName::Ended
            } else {
                self.mode.name()
            },
            clock_ms: active,
            round,
            bonus,
        }
    }

    fn snapshot_event(&self) -> SessionEvent {
        SessionEvent::StateSnapshot {
            snapshot: self.snapshot(),
        }
    }

    fn check_allowed(&self, event: &SessionEvent) -> Result<(), SessionError> {
        if self.quit {
            return Err(SessionError::SessionQuit);
        }
        if !event.is_client_event() {
            return Err(SessionError::UnexpectedEvent(event.name()));
        }
        let allowed = match (event, &self.mode) {
            (SessionEvent::Quit {}, _) => true,
            (SessionEvent::KeyHit { .. } | SessionEvent::Replay {}, Mode::Spelling(_)) => true,
            (SessionEvent::Whack { cell }, Mode::Bonus(bonus)) => {
                let grid = bonus.config().grid_cells;
                if *cell >= grid {
                    return Err(SessionError::InvalidInput(format!(
                        "cell {cell} is outside the {grid}-cell grid"
                    )));
                }
                true
            }
            (SessionEvent::Pause {}, Mode::Spelling(_) | Mode::Bonus(_)) => true,
            (SessionEvent::Resume {}, Mode::Paused { .. }) => true,
            _ => false,
        };
        if allowed {
            Ok(())
        } else {
            Err(SessionError::EventNotAllowedInMode {
                event: event.name(),
                mode: self.mode.name(),
            })
        }
    }

    /// Applies one client event received at wall time `now`.
    ///
    /// Timers are advanced to `now` first, so a key hit that arrives after a
    /// hint deadline is judged as if the ticker had already fired. Rejected
    /// events leave the session untouched. Successful responses end with a
    /// state snapshot.
    pub fn handle_event(
        &mut self,
        event: &SessionEvent,
        now: WallMillis,
    ) -> Result<Vec<SessionEvent>, SessionError> {
        self.check_allowed(event)?;
        let mut out = Vec::new();

        match *event {
            SessionEvent::KeyHit { letter } => {
                self.advance(now, &mut out)?;
                let active = self.clock.active();
                let Mode::Spelling(round) = &mut self.mode else {
                    unreachable!("ticks never leave spelling mode");
                };
                let before = round.points();
                let effects = round
                    .handle_key(letter, active)
                    .expect("active clock is monotonic and the round is running");
                self.score += u64::from(round.points() - before);
                let result = round.result();
                extend_effects(&mut out, effects);
                if let Some(result) = result {
                    self.finish_round(result, active, &mut out)?;
                }
            }
            SessionEvent::Replay {} => {
                self.advance(now, &mut out)?;
                if let Mode::Spelling(round) = &self.mode {
                    extend_effects(&mut out, round.handle_replay().expect("round is running"));
                }
            }
            SessionEvent::Whack { cell } => {
                // whack before expiry so a late whack is simply a miss
                let active = self.clock.observe(now);
                if let Mode::Bonus(bonus) = &mut self.mode {
                    bonus
                        .on_whack(cell, active)
                        .expect("cell and clock checked");
                }
                self.advance(now, &mut out)?;
            }
            SessionEvent::Pause {} => {
                self.advance(now, &mut out)?;
                self.clock.pause(now);
                let prior = std::mem::replace(&mut self.mode, Mode::Idle);
                self.mode = Mode::Paused {
                    prior: Box::new(prior),
                    since: now,
                };
            }
            SessionEvent::Resume {} => {
                self.clock.resume(now);
                if let Mode::Paused { prior, .. } = std::mem::replace(&mut self.mode, Mode::Idle) {
                    self.mode = *prior;
                }
            }
            SessionEvent::Quit {} => {
                self.clock.observe(now);
                self.quit = true;
            }
            _ => unreachable!("server events rejected by check_allowed"),
        }

        out.push(self.snapshot_event());
        Ok(out)
    }

    /// Advances timers to wall time `now`: hint escalation while spelling, or
    /// closing the bonus round once its duration has elapsed. Paused and quit
    /// sessions produce nothing.
    pub fn tick_session(&mut self, now: WallMillis) -> Result<Vec<SessionEvent>, SessionError> {
        let mut out = Vec::new();
        if self.quit {
            return Ok(out);
        }
        let bonus_closed = self.advance(now, &mut out)?;
        if bonus_closed {
            out.push(self.snapshot_event());
        }
        Ok(out)
    }

    /// Returns whether a bonus round was closed.
    fn advance(
        &mut self,
        now: WallMillis,
        out: &mut Vec<SessionEvent>,
    ) -> Result<bool, SessionError> {
        let active = self.clock.observe(now);
        match &mut self.mode {
            Mode::Spelling(round) => {
                let effects = round.handle_tick(active).expect("round is running");
                extend_effects(out, effects);
                Ok(false)
            }
            Mode::Bonus(bonus) if bonus.is_expired(active) => {
                let points = bonus.finish_bonus(active).expect("bonus expired");
                self.score += u64::from(points);
                self.bonus_rounds += 1;
                out.push(SessionEvent::BonusEnd { points });
                self.start_next_round(active, out)?;
                Ok(true)
            }
            _ => Ok(false),
        }
    }

    fn finish_round(
        &mut self,
        result: RoundResult,
        active: u64,
        out: &mut Vec<SessionEvent>,
    ) -> Result<(), SessionError> {
        self.player.record_round(&result)?;
        self.last_level_change = self
            .player
            .controller
            .adjust_level(self.catalog.max_level());
        self.rounds_completed += 1;
        self.streak = if result.perfect { self.streak + 1 } else { 0 };
        out.push(SessionEvent::RoundResult { result });

        if self.streak >= self.config.streak_for_bonus {
            self.streak = 0;
            let bonus = start_bonus(self.config.bonus.clone(), self.seeds.next_u64(), active);
            out.push(SessionEvent::BonusStart {
                bonus: BonusAnnouncement {
                    grid_cells: bonus.config().grid_cells,
                    duration_ms: bonus.config().duration_ms,
                    visible_ms: bonus.config().visible_ms,
                    points_per_whack: bonus.config().points_per_whack,
                    spawns: bonus.spawns().to_vec(),
                },
            });
            self.mode = Mode::Bonus(bonus);
            Ok(())
        } else {
            self.start_next_round(active, out)
        }
    }

    fn start_next_round(
        &mut self,
        active: u64,
        out: &mut Vec<SessionEvent>,
    ) -> Result<(), SessionError> {
        let word = self.player.next_word(&self.catalog)?;
        let (round, effects) = start_round(
            word,
            self.config.round.clone(),
            self.seeds.next_u64(),
            active,
        );
        extend_effects(out, effects);
        self.mode = Mode::Spelling(round);
        Ok(())
    }
}

fn extend_effects(out: &mut Vec<SessionEvent>, effects: Vec<Effect>) {
    out.extend(
        effects
            .into_iter()
            .map(|effect| SessionEvent::Effect { effect }),
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use moles_core::{load_catalog, Letter, LetterPhase, LevelPolicy};

    fn catalog() -> Arc<Catalog> {
        Arc::new(
            load_catalog(
                br#"{"lists":[
                    {"id":"a","name":"A","level":1,"words":["cat","dog","emu","fox"]},
                    {"id":"b","name":"B","level":2,"words":["occurrence"]}]}"#,
            )
            .unwrap(),
        )
    }

    fn fresh(seed: u64) -> (Session, Vec<SessionEvent>) {
        Session::new(
            "s1",
            LearnerProfile::new("p1", LevelPolicy::default()),
            catalog(),
            GameConfig::default(),
            seed,
            1000,
        )
        .unwrap()
    }

    fn key(c: char) -> SessionEvent {
        SessionEvent::KeyHit {
            letter: Letter::try_from(c).unwrap(),
        }
    }

    fn spell_current(session: &mut Session, now: &mut u64) -> Vec<SessionEvent> {
        let word = session.round().unwrap().word().clone();
        let mut out = Vec::new();
        for c in word.as_str().chars() {
            *now += 300;
            out.extend(session.handle_event(&key(c), *now).unwrap());
        }
        out
    }

    #[test]
    fn clock_excludes_paused_time() {
        let mut clock = ActiveClock::new(100);
        assert_eq!(clock.observe(600), 500);
        clock.pause(600);
        assert_eq!(clock.observe(10_600), 500);
        clock.resume(10_600);
        assert_eq!(clock.observe(11_000), 900);
        // backwards wall time is ignored
        assert_eq!(clock.observe(50), 900);
    }

    #[test]
    fn new_session_starts_first_word() {
        let (session, events) = fresh(1);
        assert_eq!(session.round().unwrap().word().as_str(), "cat");
        assert!(matches!(
            &events[0],
            SessionEvent::Effect { effect: Effect::SpeakWord { text } } if text.as_str() == "cat"
        ));
        assert!(matches!(
            events.last(),
            Some(SessionEvent::StateSnapshot { .. })
        ));
    }

    #[test]
    fn resume_at_saved_level() {
        let mut profile = LearnerProfile::new("p1", LevelPolicy::default());
        profile.controller.current_level = 2;
        let (session, _) =
            Session::new("s", profile, catalog(), GameConfig::default(), 1, 0).unwrap();
        assert_eq!(session.round().unwrap().word().as_str(), "occurrence");

        let mut profile = LearnerProfile::new("p1", LevelPolicy::default());
        profile.controller.current_level = 9;
        let (session, _) =
            Session::new("s", profile, catalog(), GameConfig::default(), 1, 0).unwrap();
        assert_eq!(session.player().level(), 2);
    }

    #[test]
    fn equal_inputs_equal_sessions() {
        let (mut a, ea) = fresh(99);
        let (mut b, eb) = fresh(99);
        assert_eq!(ea, eb);
        assert_eq!(a.tick_session(7000).unwrap(), b.tick_session(7000).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn three_perfect_rounds_start_bonus() {
        let (mut session, _) = fresh(5);
        let mut now = 1000;
        spell_current(&mut session, &mut now);
        spell_current(&mut session, &mut now);
        assert_eq!(session.streak(), 2);
        let events = spell_current(&mut session, &mut now);
        let last_non_snapshot = events
            .iter()
            .rev()
            .find(|e| !matches!(e, SessionEvent::StateSnapshot { .. }));
        assert!(matches!(
            last_non_snapshot,
            Some(SessionEvent::BonusStart { .. })
        ));
        assert_eq!(session.mode().name(), ModeName::Bonus);
        assert_eq!(session.streak(), 0);
        assert_eq!(session.score(), 90);
    }

    #[test]
    fn imperfect_round_resets_streak() {
        let (mut session, _) = fresh(5);
        let mut now = 1000;
        spell_current(&mut session, &mut now);
        now += 100;
        session.handle_event(&key('z'), now).unwrap();
        spell_current(&mut session, &mut now);
        assert_eq!(session.streak(), 0);
        assert_eq!(session.score(), 30 + 20);
    }

    #[test]
    fn pause_keeps_hits_unaided() {
        let (mut session, _) = fresh(5);
        session.handle_event(&SessionEvent::Pause {}, 2000).unwrap();
        assert!(session.tick_session(9000).unwrap().is_empty());
        session
            .handle_event(&SessionEvent::Resume {}, 12_000)
            .unwrap();
        // 1 s active before pause, 2 s after resume: 3 s < 5 s
        session.handle_event(&key('c'), 14_000).unwrap();
        assert_eq!(
            session.round().unwrap().records()[0].outcome,
            moles_core::Outcome::Unaided
        );
    }

    #[test]
    fn idle_time_fires_hint() {
        let (mut session, _) = fresh(5);
        assert!(session.tick_session(5999).unwrap().is_empty());
        let events = session.tick_session(6000).unwrap();
        assert!(matches!(
            &events[0],
            SessionEvent::Effect { effect: Effect::ShowChoiceBombs { letters } } if letters.len() == 3
        ));
    }

    #[test]
    fn key_after_deadline_sees_the_hint() {
        let (mut session, _) = fresh(5);
        let events = session.handle_event(&key('c'), 6500).unwrap();
        assert!(matches!(
            &events[0],
            SessionEvent::Effect {
                effect: Effect::ShowChoiceBombs { .. }
            }
        ));
        assert_eq!(session.score(), 5);
    }

    #[test]
    fn mode_guards() {
        let (mut session, _) = fresh(5);
        let before = session.clone();
        assert_eq!(
            session.handle_event(&SessionEvent::Whack { cell: 0 }, 1100),
            Err(SessionError::EventNotAllowedInMode {
                event: "whack",
                mode: ModeName::Spelling
            })
        );
        assert!(matches!(
            session.handle_event(&SessionEvent::Resume {}, 1100),
            Err(SessionError::EventNotAllowedInMode { .. })
        ));
        assert_eq!(
            session.handle_event(&SessionEvent::BonusEnd { points: 1 }, 1100),
            Err(SessionError::UnexpectedEvent("bonus_end"))
        );
        assert_eq!(session, before);

        session.handle_event(&SessionEvent::Pause {}, 1200).unwrap();
        assert!(matches!(
            session.handle_event(&key('c'), 1300),
            Err(SessionError::EventNotAllowedInMode {
                mode: ModeName::Paused,
                ..
            })
        ));
        session.handle_event(&SessionEvent::Quit {}, 1400).unwrap();
        assert_eq!(
            session.handle_event(&SessionEvent::Resume {}, 1500),
            Err(SessionError::SessionQuit)
        );
        assert_eq!(session.snapshot().mode, ModeName::Ended);
    }

    #[test]
    fn bonus_round_flow() {
        let (mut session, _) = fresh(8);
        let mut now = 1000;
        for _ in 0..3 {
            spell_current(&mut session, &mut now);
        }
        let bonus = session.bonus().unwrap().clone();
        let start_wall = now;
        let first = bonus.spawns()[0];
        assert!(matches!(
            session.handle_event(&SessionEvent::Whack { cell: 9 }, now),
            Err(SessionError::InvalidInput(_))
        ));
        session
            .handle_event(&SessionEvent::Whack { cell: first.cell }, start_wall + 100)
            .unwrap();
        assert_eq!(session.bonus().unwrap().hits().len(), 1);

        // paused time does not count towards the bonus duration
        session
            .handle_event(&SessionEvent::Pause {}, start_wall + 1000)
            .unwrap();
        session
            .handle_event(&SessionEvent::Resume {}, start_wall + 61_000)
            .unwrap();
        assert!(session
            .tick_session(start_wall + 61_000 + 28_999)
            .unwrap()
            .is_empty());
        let events = session.tick_session(start_wall + 61_000 + 29_000).unwrap();
        assert_eq!(events[0], SessionEvent::BonusEnd { points: 5 });
        assert_eq!(session.score(), 95);
        assert_eq!(session.mode().name(), ModeName::Spelling);
        assert_eq!(session.bonus_rounds(), 1);
    }

    #[test]
    fn snapshot_reports_round_progress() {
        let (mut session, _) = fresh(5);
        session.handle_event(&key('c'), 1200).unwrap();
        session.handle_event(&key('x'), 1300).unwrap();
        let snap = session.snapshot();
        let round = snap.round.unwrap();
        assert_eq!(round.typed, "c");
        assert_eq!(round.word_len, 3);
        assert_eq!(
            round.phase,
            LetterPhase::GiveawayReveal {
                correct: Letter::try_from('a').unwrap()
            }
        );
        assert_eq!(snap.score, 10);
    }
}
