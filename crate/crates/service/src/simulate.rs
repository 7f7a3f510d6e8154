//! Headless simulated learner.
//!
//! The learner knows each letter of word `w` with probability `1 - p_w`.
//! `p_w` starts at the configured error rate and is multiplied by the
//! learning rate every time the learner is shown a giveaway for that word.
//! Every action goes through the full session pipeline (driver, session,
//! engines), including occasional Play Again presses and pauses.

use std::collections::HashMap;
use std::sync::Arc;

use moles_core::{
    Catalog, Effect, LearnerProfile, Letter, LetterPhase, Outcome, RoundResult, Word,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::config::GameConfig;
use crate::driver::Driver;
use crate::log::SessionLog;
use crate::protocol::SessionEvent;
use crate::session::{Mode, SessionError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub words: usize,
    pub error_rate: f64,
    pub learning_rate: f64,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("parameter {name} = {value} is out of range ({expected})")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("session stopped unexpectedly: {0}")]
    Stalled(String),
}

impl SimParams {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.words == 0 {
            return Err(SimError::ParameterOutOfRange {
                name: "words",
                value: 0.0,
                expected: ">= 1",
            });
        }
        for (name, value) in [
            ("error_rate", self.error_rate),
            ("learning_rate", self.learning_rate),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SimError::ParameterOutOfRange {
                    name,
                    value,
                    expected: "0..=1",
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundSummary {
    pub word: Word,
    pub letters: usize,
    pub giveaways: usize,
    pub hints: usize,
    pub quality: u8,
    pub perfect: bool,
    pub points: u32,
    pub level_after: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub rounds: usize,
    pub first_half_giveaway_rate: f64,
    pub second_half_giveaway_rate: f64,
    pub mean_quality: f64,
    pub perfect_rounds: usize,
    pub bonus_rounds: usize,
    pub bonus_points: u64,
    pub final_score: u64,
    pub level_trajectory: Vec<u32>,
    pub round_details: Vec<RoundSummary>,
}

fn giveaway_rate(rounds: &[RoundSummary]) -> f64 {
    let letters: usize = rounds.iter().map(|r| r.letters).sum();
    let giveaways: usize = rounds.iter().map(|r| r.giveaways).sum();
    if letters == 0 {
        0.0
    } else {
        giveaways as f64 / letters as f64
    }
}

struct Learner {
    rng: ChaCha8Rng,
    error_rate: f64,
    learning_rate: f64,
    per_word: HashMap<Word, f64>,
}

impl Learner {
    fn error_for(&mut self, word: &Word) -> f64 {
        *self.per_word.entry(word.clone()).or_insert(self.error_rate)
    }

    fn exposed(&mut self, word: &Word) {
        let rate = self.learning_rate;
        if let Some(p) = self.per_word.get_mut(word) {
            *p *= rate;
        }
    }

    fn think(&mut self) -> u64 {
        self.rng.random_range(300..1500)
    }

    fn wrong_letter(&mut self, correct: Letter) -> Letter {
        let offset = self.rng.random_range(1..Letter::COUNT);
        Letter::from_index((correct.index() + offset) % Letter::COUNT).expect("index below 26")
    }
}

/// Plays `params.words` rounds against a fresh profile and summarizes them.
pub fn simulate(
    params: SimParams,
    catalog: Arc<Catalog>,
    config: GameConfig,
    log: Option<SessionLog>,
) -> Result<SimSummary, SimError> {
    params.validate()?;
    let profile = LearnerProfile::new("simulated", config.level.clone());
    let (mut driver, _) = Driver::new(
        format!("sim-{}", params.seed),
        profile,
        catalog,
        config,
        params.seed,
        0,
        log,
        None,
    )?;
    let mut learner = Learner {
        rng: ChaCha8Rng::seed_from_u64(params.seed ^ 0x5EED_1EA7_0000_0001),
        error_rate: params.error_rate,
        learning_rate: params.learning_rate,
        per_word: HashMap::new(),
    };

    let mut now: u64 = 0;
    let mut results: Vec<RoundSummary> = Vec::new();
    let mut bonus_rounds = 0;
    let mut bonus_points = 0u64;

    while results.len() < params.words {
        let session = driver.session();
        let mut events = Vec::new();
        let mut word_in_play = None;

        match session.mode() {
            Mode::Spelling(round) => {
                let word = round.word().clone();
                let correct = round.expected().expect("running round");
                let p = learner.error_for(&word);
                let hint_due = round.phase_entered_at() + round.config().choice_hint_delay_ms;
                let giveaway_due = round.phase_entered_at() + round.config().giveaway_delay_ms;
                let active = session.clock().active_at(now);
                let phase = round.phase().clone();
                word_in_play = Some(word);

                match phase {
                    LetterPhase::AwaitingInput => {
                        if learner.rng.random_bool(0.05) {
                            now += 200;
                            events.extend(driver.client_event(&SessionEvent::Replay {}, now));
                        }
                        if learner.rng.random_bool(0.02) {
                            now += 100;
                            events.extend(driver.client_event(&SessionEvent::Pause {}, now));
                            now += learner.rng.random_range(2_000..20_000);
                            events.extend(driver.tick(now));
                            events.extend(driver.client_event(&SessionEvent::Resume {}, now));
                        }
                        if learner.rng.random_bool(1.0 - p) {
                            now += learner.think();
                            events.extend(
                                driver.client_event(&SessionEvent::KeyHit { letter: correct }, now),
                            );
                        } else if learner.rng.random_bool(0.5) {
                            now += learner.think();
                            let wrong = learner.wrong_letter(correct);
                            events.extend(
                                driver.client_event(&SessionEvent::KeyHit { letter: wrong }, now),
                            );
                        } else {
                            // hesitate until the multiple-choice hint appears
                            let active = driver.session().clock().active_at(now);
                            now += hint_due.saturating_sub(active);
                            events.extend(driver.tick(now));
                        }
                    }
                    LetterPhase::ChoiceHint { choices } => {
                        if learner.rng.random_bool(0.2) {
                            now += giveaway_due.saturating_sub(active);
                            events.extend(driver.tick(now));
                        } else {
                            now += learner.think();
                            let pick = if learner.rng.random_bool(1.0 - p) {
                                correct
                            } else {
                                choices[learner.rng.random_range(0..choices.len())]
                            };
                            events.extend(
                                driver.client_event(&SessionEvent::KeyHit { letter: pick }, now),
                            );
                        }
                    }
                    LetterPhase::GiveawayReveal { correct } => {
                        now += learner.think();
                        events.extend(
                            driver.client_event(&SessionEvent::KeyHit { letter: correct }, now),
                        );
                    }
                }
            }
            Mode::Bonus(bonus) => {
                let bonus = bonus.clone();
                let visible = bonus.config().visible_ms;
                let grid = bonus.config().grid_cells;
                for spawn in bonus.spawns() {
                    let roll: f64 = learner.rng.random();
                    let cell = if roll < 0.8 {
                        spawn.cell
                    } else if roll < 0.9 {
                        (spawn.cell + 1) % grid
                    } else {
                        continue;
                    };
                    let target =
                        bonus.start() + spawn.t_offset + learner.rng.random_range(0..visible);
                    let active = driver.session().clock().active_at(now);
                    now += target.saturating_sub(active);
                    events.extend(driver.client_event(&SessionEvent::Whack { cell }, now));
                }
                let end = bonus.start() + bonus.config().duration_ms;
                let active = driver.session().clock().active_at(now);
                now += end.saturating_sub(active);
                events.extend(driver.tick(now));
            }
            Mode::Paused { .. } => {
                now += 100;
                events.extend(driver.client_event(&SessionEvent::Resume {}, now));
            }
            Mode::Idle => return Err(SimError::Stalled("session is idle".into())),
        }

        for event in &events {
            match event {
                SessionEvent::Effect {
                    effect: Effect::ExplodeRevealMole { .. },
                } => {
                    if let Some(word) = &word_in_play {
                        learner.exposed(word);
                    }
                }
                SessionEvent::RoundResult { result } if results.len() < params.words => {
                    results.push(summarize(result, driver.session().player().level()));
                }
                SessionEvent::BonusStart { .. } => bonus_rounds += 1,
                SessionEvent::BonusEnd { points } => bonus_points += u64::from(*points),
                SessionEvent::Error { message, .. } => {
                    return Err(SimError::Stalled(message.clone()))
                }
                _ => {}
            }
        }
    }

    now += 500;
    driver.client_event(&SessionEvent::Quit {}, now);

    let half = results.len() / 2;
    let mean_quality =
        results.iter().map(|r| f64::from(r.quality)).sum::<f64>() / results.len() as f64;
    Ok(SimSummary {
        rounds: results.len(),
        first_half_giveaway_rate: giveaway_rate(&results[..half]),
        second_half_giveaway_rate: giveaway_rate(&results[half..]),
        mean_quality,
        perfect_rounds: results.iter().filter(|r| r.perfect).count(),
        bonus_rounds,
        bonus_points,
        final_score: driver.session().score(),
        level_trajectory: results.iter().map(|r| r.level_after).collect(),
        round_details: results,
    })
}

fn summarize(result: &RoundResult, level_after: u32) -> RoundSummary {
    let count = |o: Outcome| result.records.iter().filter(|r| r.outcome == o).count();
    RoundSummary {
        word: result.word.clone(),
        letters: result.records.len(),
        giveaways: count(Outcome::AfterGiveaway),
        hints: count(Outcome::AfterChoiceHint),
        quality: result.quality,
        perfect: result.perfect,
        points: result.points,
        level_after,
    }
}
