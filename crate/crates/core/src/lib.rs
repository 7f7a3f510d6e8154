//! Game engine for a Whac-A-Mole style spelling tutor.
//!
//! - [`catalog`]: difficulty-leveled word lists.
//! - [`round`]: the per-word spelling state machine with timed hints.
//! - [`bonus`]: the Whac-A-Mole bonus round.
//! - [`learning`]: SM-2 spaced repetition and level graduation, generic over
//!   the [`Real`] scalar type.
//!
//! Every state type is a plain value driven by caller-supplied timestamps, so
//! a fixed seed and event sequence always reproduce the same states and
//! effects.

pub mod bonus;
pub mod catalog;
pub mod learning;
pub mod round;
pub mod scalar;

/// Milliseconds on the caller's clock.
pub type Millis = u64;

pub use bonus::{start_bonus, BonusConfig, BonusError, BonusState, Spawn};
pub use catalog::{
    load_catalog, normalize_word, validate_document, Catalog, CatalogError, Letter, Word,
    WordError, WordList, MAX_WORD_LEN,
};
pub use learning::{LearningError, LevelChange};
pub use round::{
    compute_quality, pick_decoys, start_round, Effect, GameRng, LetterPhase, LetterRecord, Outcome,
    RoundConfig, RoundError, RoundResult, RoundState,
};
pub use scalar::Real;

pub type WordMemory = learning::WordMemory<f64>;
pub type LevelPolicy = learning::LevelPolicy<f64>;
pub type LevelController = learning::LevelController<f64>;
pub type LearnerProfile = learning::LearnerProfile<f64>;

pub type WordMemory32 = learning::WordMemory<f32>;
pub type LevelPolicy32 = learning::LevelPolicy<f32>;
pub type LevelController32 = learning::LevelController<f32>;
pub type LearnerProfile32 = learning::LearnerProfile<f32>;
