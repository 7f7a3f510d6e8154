//! Per-word spelling state machine.
//!
//! Each letter of the word starts in [`LetterPhase::AwaitingInput`]. If nothing
//! is hit for `choice_hint_delay_ms` the correct letter is offered among random
//! decoys ([`LetterPhase::ChoiceHint`]); after a further `giveaway_delay_ms`
//! the correct letter is revealed ([`LetterPhase::GiveawayReveal`]). A wrong
//! hit jumps straight to the reveal. Time is always supplied by the caller, so
//! a round is a pure function of its inputs.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Letter, Word};
use crate::Millis;

/// Deterministic generator used for decoys and bonus schedules.
pub type GameRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> GameRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoundConfig {
    pub choice_hint_delay_ms: Millis,
    pub giveaway_delay_ms: Millis,
    pub decoy_count: usize,
    pub points_unaided: u32,
    pub points_after_hint: u32,
    pub points_giveaway: u32,
}

impl Default for RoundConfig {
    fn default() -> Self {
        RoundConfig {
            choice_hint_delay_ms: 5000,
            giveaway_delay_ms: 5000,
            decoy_count: 2,
            points_unaided: 10,
            points_after_hint: 5,
            points_giveaway: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoundConfigError {
    #[error(
        "points must satisfy 0 < points_after_hint ({after_hint}) < points_unaided ({unaided})"
    )]
    PointsOrdering { unaided: u32, after_hint: u32 },
    #[error("points_giveaway must be 0, got {0}")]
    GiveawayPoints(u32),
    #[error("decoy_count must be in 1..=25, got {0}")]
    DecoyCount(usize),
}

impl RoundConfig {
    pub fn validate(&self) -> Result<(), RoundConfigError> {
        if !(0 < self.points_after_hint && self.points_after_hint < self.points_unaided) {
            return Err(RoundConfigError::PointsOrdering {
                unaided: self.points_unaided,
                after_hint: self.points_after_hint,
            });
        }
        if self.points_giveaway != 0 {
            return Err(RoundConfigError::GiveawayPoints(self.points_giveaway));
        }
        if !(1..=MAX_DECOYS).contains(&self.decoy_count) {
            return Err(RoundConfigError::DecoyCount(self.decoy_count));
        }
        Ok(())
    }

    pub fn points_for(&self, outcome: Outcome) -> u32 {
        match outcome {
            Outcome::Unaided => self.points_unaided,
            Outcome::AfterChoiceHint => self.points_after_hint,
            Outcome::AfterGiveaway => self.points_giveaway,
        }
    }
}

/// Decoys are drawn from the letters other than the correct one.
pub const MAX_DECOYS: usize = Letter::COUNT - 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case", deny_unknown_fields)]
pub enum LetterPhase {
    AwaitingInput,
    /// `choices` is sorted and holds the correct letter plus the decoys.
    ChoiceHint {
        choices: Vec<Letter>,
    },
    GiveawayReveal {
        correct: Letter,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Unaided,
    AfterChoiceHint,
    AfterGiveaway,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [
        Outcome::Unaided,
        Outcome::AfterChoiceHint,
        Outcome::AfterGiveaway,
    ];

    /// Quality weight in tenths: 1.0, 0.6 and 0.0.
    fn weight_tenths(self) -> u32 {
        match self {
            Outcome::Unaided => 10,
            Outcome::AfterChoiceHint => 6,
            Outcome::AfterGiveaway => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LetterRecord {
    pub letter: Letter,
    pub outcome: Outcome,
    pub wrong_attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundResult {
    pub word: Word,
    pub records: Vec<LetterRecord>,
    pub points: u32,
    pub quality: u8,
    pub perfect: bool,
}

/// Audiovisual feedback for the client.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Effect {
    SpeakWord { text: Word },
    SpeakLetter { letter: Letter },
    LetterAccepted { letter: Letter, index: usize },
    KeyFlashGreen { letter: Letter },
    KeyFlashRed { letter: Letter },
    PlayChime {},
    PlayBuzzer {},
    ShowChoiceBombs { letters: Vec<Letter> },
    ExplodeRevealMole { letter: Letter },
    RoundComplete { result: RoundResult },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoundError {
    #[error("round is already complete")]
    RoundAlreadyComplete,
    #[error("time {now} precedes the current phase start {phase_entered_at}")]
    ClockRegression {
        now: Millis,
        phase_entered_at: Millis,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DecoyError {
    #[error("decoy count must be in 1..=25, got {0}")]
    CountOutOfRange(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum QualityError {
    #[error("cannot grade a round with no letters")]
    EmptyRecords,
}

/// Draws `count` distinct letters other than `correct`, uniformly without
/// replacement. The result is sorted.
pub fn pick_decoys(
    rng: &mut GameRng,
    correct: Letter,
    count: usize,
) -> Result<Vec<Letter>, DecoyError> {
    if !(1..=MAX_DECOYS).contains(&count) {
        return Err(DecoyError::CountOutOfRange(count));
    }
    let skip = correct.index();
    let mut decoys: Vec<Letter> = index::sample(rng, MAX_DECOYS, count)
        .into_iter()
        .map(|i| Letter::from_index(if i < skip { i } else { i + 1 }).expect("index below 26"))
        .collect();
    decoys.sort_unstable();
    Ok(decoys)
}

/// Grades a round 0..=5 from its per-letter outcomes.
///
/// The weighted mean `raw` is rounded as `floor(raw * 5 + 0.5)`. With weights
/// kept in tenths this is exactly `floor((S + n) / 2n)` for weight sum `S`
/// over `n` letters, so there is no float rounding at the half-way points.
pub fn compute_quality<I>(outcomes: I) -> Result<u8, QualityError>
where
    I: IntoIterator<Item = Outcome>,
{
    let (sum, n) = outcomes.into_iter().fold((0u64, 0u64), |(s, n), o| {
        (s + u64::from(o.weight_tenths()), n + 1)
    });
    if n == 0 {
        return Err(QualityError::EmptyRecords);
    }
    Ok(((sum + n) / (2 * n)) as u8)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundState {
    word: Word,
    config: RoundConfig,
    cursor: usize,
    phase: LetterPhase,
    phase_entered_at: Millis,
    wrong_attempts: u32,
    records: Vec<LetterRecord>,
    points: u32,
    rng: GameRng,
    completed: bool,
}

/// Starts a round; the only effect is the word being spoken.
pub fn start_round(
    word: Word,
    config: RoundConfig,
    seed: u64,
    now: Millis,
) -> (RoundState, Vec<Effect>) {
    debug_assert!(
        config.validate().is_ok(),
        "round config must be validated by the caller"
    );
    let effects = vec![Effect::SpeakWord { text: word.clone() }];
    let state = RoundState {
        word,
        config,
        cursor: 0,
        phase: LetterPhase::AwaitingInput,
        phase_entered_at: now,
        wrong_attempts: 0,
        records: Vec::new(),
        points: 0,
        rng: seeded_rng(seed),
        completed: false,
    };
    (state, effects)
}

impl RoundState {
    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn config(&self) -> &RoundConfig {
        &self.config
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn phase(&self) -> &LetterPhase {
        &self.phase
    }

    pub fn phase_entered_at(&self) -> Millis {
        self.phase_entered_at
    }

    pub fn records(&self) -> &[LetterRecord] {
        &self.records
    }

    pub fn points(&self) -> u32 {
        self.points
    }

    pub fn is_completed(&self) -> bool {
        self.completed
    }

    /// Letters typed so far, as shown in the word text area.
    pub fn typed(&self) -> &str {
        &self.word.as_str()[..self.cursor]
    }

    /// The letter currently expected, if the round is still running.
    pub fn expected(&self) -> Option<Letter> {
        (!self.completed).then(|| self.word.letter(self.cursor))
    }

    /// Final result once every letter has been accepted.
    pub fn result(&self) -> Option<RoundResult> {
        self.completed.then(|| self.build_result())
    }

    fn build_result(&self) -> RoundResult {
        let quality = compute_quality(self.records.iter().map(|r| r.outcome))
            .expect("completed rounds have at least one letter");
        RoundResult {
            word: self.word.clone(),
            records: self.records.clone(),
            points: self.points,
            quality,
            perfect: self
                .records
                .iter()
                .all(|r| r.outcome == Outcome::Unaided && r.wrong_attempts == 0),
        }
    }

    fn check_active(&self, now: Millis) -> Result<Letter, RoundError> {
        if self.completed {
            return Err(RoundError::RoundAlreadyComplete);
        }
        if now < self.phase_entered_at {
            return Err(RoundError::ClockRegression {
                now,
                phase_entered_at: self.phase_entered_at,
            });
        }
        Ok(self.word.letter(self.cursor))
    }

    pub fn handle_key(&mut self, letter: Letter, now: Millis) -> Result<Vec<Effect>, RoundError> {
        let correct = self.check_active(now)?;

        if letter != correct {
            return Ok(match self.phase {
                LetterPhase::GiveawayReveal { .. } => vec![Effect::PlayBuzzer {}],
                LetterPhase::AwaitingInput | LetterPhase::ChoiceHint { .. } => {
                    self.wrong_attempts += 1;
                    self.phase = LetterPhase::GiveawayReveal { correct };
                    self.phase_entered_at = now;
                    vec![
                        Effect::KeyFlashRed { letter },
                        Effect::PlayBuzzer {},
                        Effect::ExplodeRevealMole { letter: correct },
                    ]
                }
            });
        }

        let outcome = match self.phase {
            LetterPhase::AwaitingInput => Outcome::Unaided,
            LetterPhase::ChoiceHint { .. } => Outcome::AfterChoiceHint,
            LetterPhase::GiveawayReveal { .. } => Outcome::AfterGiveaway,
        };
        self.points += self.config.points_for(outcome);
        self.records.push(LetterRecord {
            letter,
            outcome,
            wrong_attempts: self.wrong_attempts,
        });
        let index = self.cursor;
        self.cursor += 1;
        self.wrong_attempts = 0;
        self.phase = LetterPhase::AwaitingInput;
        self.phase_entered_at = now;

        let mut effects = vec![
            Effect::KeyFlashGreen { letter },
            Effect::PlayChime {},
            Effect::LetterAccepted { letter, index },
            Effect::SpeakLetter { letter },
        ];
        if self.cursor == self.word.len() {
            self.completed = true;
            effects.push(Effect::RoundComplete {
                result: self.build_result(),
            });
        }
        Ok(effects)
    }

    /// Advances the hint escalation by at most one stage.
    pub fn handle_tick(&mut self, now: Millis) -> Result<Vec<Effect>, RoundError> {
        let correct = self.check_active(now)?;
        let waited = now - self.phase_entered_at;
        match self.phase {
            LetterPhase::AwaitingInput if waited >= self.config.choice_hint_delay_ms => {
                let mut choices = pick_decoys(&mut self.rng, correct, self.config.decoy_count)
                    .expect("decoy_count validated with the config");
                choices.push(correct);
                choices.sort_unstable();
                self.phase = LetterPhase::ChoiceHint {
                    choices: choices.clone(),
                };
                self.phase_entered_at = now;
                Ok(vec![Effect::ShowChoiceBombs { letters: choices }])
            }
            LetterPhase::ChoiceHint { .. } if waited >= self.config.giveaway_delay_ms => {
                self.phase = LetterPhase::GiveawayReveal { correct };
                self.phase_entered_at = now;
                Ok(vec![Effect::ExplodeRevealMole { letter: correct }])
            }
            _ => Ok(Vec::new()),
        }
    }

    /// "Play Again": repeats the word without touching any state.
    pub fn handle_replay(&self) -> Result<Vec<Effect>, RoundError> {
        if self.completed {
            return Err(RoundError::RoundAlreadyComplete);
        }
        Ok(vec![Effect::SpeakWord {
            text: self.word.clone(),
        }])
    }
}
