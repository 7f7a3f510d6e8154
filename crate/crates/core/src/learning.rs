//! Spaced repetition and level graduation.
//!
//! Word memories follow the SM-2 update rule, with intervals counted in word
//! presentations instead of days. A [`LevelController`] watches a window of
//! recent round qualities and moves the learner between catalog levels.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Catalog, CatalogError, Word};
use crate::round::RoundResult;
use crate::scalar::Real;

pub const MIN_EASINESS: f64 = 1.3;
pub const INITIAL_EASINESS: f64 = 2.5;
pub const MAX_QUALITY: u8 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LearningError {
    #[error("quality {0} is outside 0..=5")]
    QualityOutOfRange(u8),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordMemory<F> {
    pub word: Word,
    pub ef: F,
    pub repetitions: u32,
    pub interval: u32,
    pub due_at: u64,
}

impl<F: Real> WordMemory<F> {
    pub fn new(word: Word) -> Self {
        WordMemory {
            word,
            ef: F::lit(INITIAL_EASINESS),
            repetitions: 0,
            interval: 1,
            due_at: 0,
        }
    }

    /// SM-2 review: adjusts the easiness factor, then either grows the
    /// interval (quality >= 3) or resets it. The word becomes due `interval`
    /// presentations after `counter`.
    pub fn update(&self, quality: u8, counter: u64) -> Result<Self, LearningError> {
        if quality > MAX_QUALITY {
            return Err(LearningError::QualityOutOfRange(quality));
        }
        let miss = F::lit(f64::from(MAX_QUALITY - quality));
        let delta = F::lit(0.1) - miss * (F::lit(0.08) + miss * F::lit(0.02));
        let ef = (self.ef + delta).max(F::lit(MIN_EASINESS));

        let (repetitions, interval) = if quality >= 3 {
            let repetitions = self.repetitions + 1;
            let interval = match repetitions {
                1 => 1,
                2 => 6,
                _ => {
                    let grown = (F::from(self.interval).expect("u32 fits a float") * ef).round();
                    grown.to_u32().unwrap_or(u32::MAX).max(1)
                }
            };
            (repetitions, interval)
        } else {
            (0, 1)
        };

        Ok(WordMemory {
            word: self.word.clone(),
            ef,
            repetitions,
            interval,
            due_at: counter + u64::from(interval),
        })
    }
}

/// Free-function form of [`WordMemory::update`].
pub fn update_memory<F: Real>(
    memory: &WordMemory<F>,
    quality: u8,
    counter: u64,
) -> Result<WordMemory<F>, LearningError> {
    memory.update(quality, counter)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound(deserialize = "F: Real + Deserialize<'de>"))]
pub struct LevelPolicy<F> {
    pub window: usize,
    pub promote_mean: F,
    pub demote_mean: F,
}

impl<F: Real> Default for LevelPolicy<F> {
    fn default() -> Self {
        LevelPolicy {
            window: 10,
            promote_mean: F::lit(4.5),
            demote_mean: F::lit(2.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LevelPolicyError {
    #[error("window must be at least 1")]
    EmptyWindow,
    #[error("demote_mean ({demote}) must be below promote_mean ({promote})")]
    Thresholds { demote: String, promote: String },
}

impl<F: Real> LevelPolicy<F> {
    pub fn validate(&self) -> Result<(), LevelPolicyError> {
        if self.window == 0 {
            return Err(LevelPolicyError::EmptyWindow);
        }
        // partial_cmp so NaN thresholds are rejected too
        if self.demote_mean.partial_cmp(&self.promote_mean) != Some(std::cmp::Ordering::Less) {
            return Err(LevelPolicyError::Thresholds {
                demote: self.demote_mean.to_string(),
                promote: self.promote_mean.to_string(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelChange {
    Unchanged,
    Promoted,
    Demoted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(deserialize = "F: Real + Deserialize<'de>"))]
pub struct LevelController<F> {
    pub policy: LevelPolicy<F>,
    pub current_level: u32,
    pub recent_qualities: VecDeque<u8>,
}

impl<F: Real> LevelController<F> {
    pub fn new(policy: LevelPolicy<F>) -> Self {
        LevelController {
            policy,
            current_level: 1,
            recent_qualities: VecDeque::new(),
        }
    }

    /// Appends a quality, keeping only the latest `window` values.
    pub fn push_quality(&mut self, quality: u8) {
        self.recent_qualities.push_back(quality);
        while self.recent_qualities.len() > self.policy.window {
            self.recent_qualities.pop_front();
        }
    }

    pub fn mean_quality(&self) -> Option<F> {
        if self.recent_qualities.is_empty() {
            return None;
        }
        let sum: u32 = self.recent_qualities.iter().map(|&q| u32::from(q)).sum();
        Some(F::from(sum)? / F::from(self.recent_qualities.len())?)
    }

    /// Promotes or demotes once the window is full. Any move clears the
    /// window, even when the level is already at its bound.
    pub fn adjust_level(&mut self, max_level: u32) -> LevelChange {
        if self.recent_qualities.len() < self.policy.window {
            return LevelChange::Unchanged;
        }
        let mean = self.mean_quality().expect("window is non-empty");
        let previous = self.current_level;
        if mean >= self.policy.promote_mean {
            self.current_level = (self.current_level + 1).min(max_level.max(1));
        } else if mean <= self.policy.demote_mean {
            self.current_level = self.current_level.saturating_sub(1).max(1);
        } else {
            return LevelChange::Unchanged;
        }
        self.recent_qualities.clear();
        match self.current_level.cmp(&previous) {
            std::cmp::Ordering::Greater => LevelChange::Promoted,
            std::cmp::Ordering::Less => LevelChange::Demoted,
            std::cmp::Ordering::Equal => LevelChange::Unchanged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("memory for {word:?} has easiness {ef} below 1.3")]
    Easiness { word: String, ef: String },
    #[error("memory for {word:?} has interval 0")]
    Interval { word: String },
    #[error("memory keyed {key:?} describes {word:?}")]
    Key { key: String, word: String },
    #[error("level must be at least 1")]
    Level,
    #[error("quality window holds {len} entries but the window is {window}")]
    Window { len: usize, window: usize },
    #[error("recent quality {0} outside 0..=5")]
    Quality(u8),
    #[error(transparent)]
    Policy(#[from] LevelPolicyError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(deserialize = "F: Real + Deserialize<'de>"))]
pub struct LearnerProfile<F> {
    pub player_id: String,
    pub memories: BTreeMap<Word, WordMemory<F>>,
    pub controller: LevelController<F>,
    pub presentation_counter: u64,
}

impl<F: Real> LearnerProfile<F> {
    pub fn new(player_id: impl Into<String>, policy: LevelPolicy<F>) -> Self {
        LearnerProfile {
            player_id: player_id.into(),
            memories: BTreeMap::new(),
            controller: LevelController::new(policy),
            presentation_counter: 0,
        }
    }

    pub fn level(&self) -> u32 {
        self.controller.current_level
    }

    pub fn due_count(&self) -> usize {
        self.memories
            .values()
            .filter(|m| m.due_at <= self.presentation_counter)
            .count()
    }

    /// Picks the next word to present:
    /// 1. the earliest-due memory that is already due (any level),
    /// 2. otherwise the first unseen word of the current level,
    /// 3. otherwise the earliest-due memory overall.
    ///
    /// Ties on `due_at` go to the lexicographically smaller word.
    pub fn next_word(&self, catalog: &Catalog) -> Result<Word, LearningError> {
        let earliest = |due_only: bool| {
            self.memories
                .values()
                .filter(|m| !due_only || m.due_at <= self.presentation_counter)
                .min_by(|a, b| (a.due_at, &a.word).cmp(&(b.due_at, &b.word)))
                .map(|m| m.word.clone())
        };
        if let Some(word) = earliest(true) {
            return Ok(word);
        }
        let list = catalog.list_at_level(self.controller.current_level)?;
        if let Some(word) = list.words.iter().find(|w| !self.memories.contains_key(*w)) {
            return Ok(word.clone());
        }
        Ok(earliest(false).expect("current list is non-empty and fully seen"))
    }

    /// Counts the presentation, then reviews the word's memory with the
    /// round quality.
    pub fn record_round(&mut self, result: &RoundResult) -> Result<(), LearningError> {
        self.presentation_counter += 1;
        let memory = self
            .memories
            .entry(result.word.clone())
            .or_insert_with(|| WordMemory::new(result.word.clone()));
        *memory = memory.update(result.quality, self.presentation_counter)?;
        self.controller.push_quality(result.quality);
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        for (key, memory) in &self.memories {
            if key != &memory.word {
                return Err(ProfileError::Key {
                    key: key.to_string(),
                    word: memory.word.to_string(),
                });
            }
            if memory.ef.is_nan() || memory.ef < F::lit(MIN_EASINESS) {
                return Err(ProfileError::Easiness {
                    word: key.to_string(),
                    ef: memory.ef.to_string(),
                });
            }
            if memory.interval == 0 {
                return Err(ProfileError::Interval {
                    word: key.to_string(),
                });
            }
        }
        let controller = &self.controller;
        controller.policy.validate()?;
        if controller.current_level == 0 {
            return Err(ProfileError::Level);
        }
        if controller.recent_qualities.len() > controller.policy.window {
            return Err(ProfileError::Window {
                len: controller.recent_qualities.len(),
                window: controller.policy.window,
            });
        }
        if let Some(&q) = controller
            .recent_qualities
            .iter()
            .find(|&&q| q > MAX_QUALITY)
        {
            return Err(ProfileError::Quality(q));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{load_catalog, normalize_word};
    use crate::round::{LetterRecord, Outcome};

    type Memory = WordMemory<f64>;
    type Profile = LearnerProfile<f64>;

    fn word(s: &str) -> Word {
        normalize_word(s).unwrap()
    }

    fn memory(ef: f64, repetitions: u32, interval: u32, due_at: u64) -> Memory {
        WordMemory {
            word: word("cat"),
            ef,
            repetitions,
            interval,
            due_at,
        }
    }

    fn result(w: &str, quality: u8) -> RoundResult {
        RoundResult {
            word: word(w),
            records: vec![LetterRecord {
                letter: word(w).letter(0),
                outcome: Outcome::Unaided,
                wrong_attempts: 0,
            }],
            points: 10,
            quality,
            perfect: quality == 5,
        }
    }

    fn catalog() -> Catalog {
        load_catalog(
            br#"{"lists":[
                {"id":"one","name":"One","level":1,"words":["cat","occurrence"]},
                {"id":"two","name":"Two","level":2,"words":["rhythm"]},
                {"id":"three","name":"Three","level":3,"words":["onomatopoeia"]}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn sm2_first_success() {
        let next = Memory::new(word("cat")).update(5, 0).unwrap();
        assert!((next.ef - 2.6).abs() < 1e-12);
        assert_eq!(next.repetitions, 1);
        assert_eq!(next.interval, 1);
        assert_eq!(next.due_at, 1);
    }

    #[test]
    fn sm2_third_success() {
        let next = memory(2.5, 2, 6, 0).update(4, 10).unwrap();
        assert!((next.ef - 2.5).abs() < 1e-12);
        assert_eq!(next.repetitions, 3);
        assert_eq!(next.interval, 15);
        assert_eq!(next.due_at, 25);
    }

    #[test]
    fn sm2_failure_clamps_and_resets() {
        let next = memory(1.3, 7, 40, 0).update(0, 3).unwrap();
        assert_eq!(next.ef, 1.3);
        assert_eq!(next.repetitions, 0);
        assert_eq!(next.interval, 1);
        assert_eq!(next.due_at, 4);
        assert_eq!(
            memory(2.5, 0, 1, 0).update(6, 0),
            Err(LearningError::QualityOutOfRange(6))
        );
    }

    #[test]
    fn sm2_second_success_interval_six() {
        let next = memory(2.5, 1, 1, 0).update(3, 0).unwrap();
        assert_eq!(next.interval, 6);
        assert!((next.ef - 2.36).abs() < 1e-12);
    }

    #[test]
    fn sm2_works_in_f32() {
        let next = WordMemory::<f32>::new(word("cat")).update(5, 0).unwrap();
        assert!((next.ef - 2.6f32).abs() < 1e-6);
    }

    #[test]
    fn ef_is_monotone_in_quality() {
        for start in [1.3, 1.7, 2.5, 3.1] {
            let m = memory(start, 3, 10, 0);
            for lo in 0..=5u8 {
                for hi in lo..=5u8 {
                    assert!(m.update(hi, 0).unwrap().ef >= m.update(lo, 0).unwrap().ef);
                }
            }
        }
    }

    #[test]
    fn fresh_profile_takes_first_word() {
        let profile = Profile::new("p", LevelPolicy::default());
        assert_eq!(profile.next_word(&catalog()).unwrap().as_str(), "cat");
    }

    #[test]
    fn due_word_with_earliest_due_at_wins() {
        let mut profile = Profile::new("p", LevelPolicy::default());
        profile.presentation_counter = 8;
        for (w, due) in [("rhythm", 7), ("occurrence", 4)] {
            profile.memories.insert(
                word(w),
                WordMemory {
                    due_at: due,
                    ..WordMemory::new(word(w))
                },
            );
        }
        assert_eq!(
            profile.next_word(&catalog()).unwrap().as_str(),
            "occurrence"
        );
    }

    #[test]
    fn unseen_word_before_not_yet_due() {
        let mut profile = Profile::new("p", LevelPolicy::default());
        profile.presentation_counter = 8;
        profile.memories.insert(
            word("cat"),
            WordMemory {
                due_at: 12,
                ..WordMemory::new(word("cat"))
            },
        );
        assert_eq!(
            profile.next_word(&catalog()).unwrap().as_str(),
            "occurrence"
        );
    }

    #[test]
    fn all_seen_none_due_takes_earliest() {
        let mut profile = Profile::new("p", LevelPolicy::default());
        profile.presentation_counter = 8;
        for (w, due) in [("cat", 12), ("occurrence", 9)] {
            profile.memories.insert(
                word(w),
                WordMemory {
                    due_at: due,
                    ..WordMemory::new(word(w))
                },
            );
        }
        assert_eq!(
            profile.next_word(&catalog()).unwrap().as_str(),
            "occurrence"
        );
    }

    #[test]
    fn next_word_at_level_two() {
        let mut profile = Profile::new("p", LevelPolicy::default());
        profile.controller.current_level = 2;
        assert_eq!(profile.next_word(&catalog()).unwrap().as_str(), "rhythm");
        profile.controller.current_level = 7;
        assert!(matches!(
            profile.next_word(&catalog()),
            Err(LearningError::Catalog(_))
        ));
    }

    #[test]
    fn record_round_counts_and_updates() {
        let mut profile = Profile::new("p", LevelPolicy::default());
        profile.record_round(&result("cat", 5)).unwrap();
        assert_eq!(profile.presentation_counter, 1);
        assert_eq!(profile.memories.len(), 1);
        assert_eq!(profile.memories[&word("cat")].repetitions, 1);
        profile.record_round(&result("occurrence", 2)).unwrap();
        profile.record_round(&result("cat", 4)).unwrap();
        assert_eq!(profile.presentation_counter, 3);
        assert_eq!(
            profile.controller.recent_qualities,
            VecDeque::from([5, 2, 4])
        );
    }

    #[test]
    fn record_round_is_deterministic() {
        let run = || {
            let mut p = Profile::new("p", LevelPolicy::default());
            for (w, q) in [("cat", 5), ("occurrence", 1), ("cat", 3), ("occurrence", 4)] {
                p.record_round(&result(w, q)).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn promotion_after_full_window() {
        let mut c = LevelController::<f64>::new(LevelPolicy::default());
        for _ in 0..9 {
            c.push_quality(5);
        }
        assert_eq!(c.adjust_level(3), LevelChange::Unchanged);
        assert_eq!(c.current_level, 1);
        c.push_quality(5);
        assert_eq!(c.adjust_level(3), LevelChange::Promoted);
        assert_eq!(c.current_level, 2);
        assert!(c.recent_qualities.is_empty());
    }

    #[test]
    fn demotion_floors_at_one() {
        let mut c = LevelController::<f64>::new(LevelPolicy::default());
        for _ in 0..10 {
            c.push_quality(1);
        }
        assert_eq!(c.adjust_level(3), LevelChange::Unchanged);
        assert_eq!(c.current_level, 1);
        assert!(c.recent_qualities.is_empty());
    }

    #[test]
    fn promotion_caps_at_max_level() {
        let mut c = LevelController::<f64>::new(LevelPolicy::default());
        c.current_level = 3;
        for _ in 0..10 {
            c.push_quality(5);
        }
        c.adjust_level(3);
        assert_eq!(c.current_level, 3);
        for _ in 0..10 {
            c.push_quality(0);
        }
        assert_eq!(c.adjust_level(3), LevelChange::Demoted);
        assert_eq!(c.current_level, 2);
    }

    #[test]
    fn middling_window_keeps_level() {
        let mut c = LevelController::<f32>::new(LevelPolicy::default());
        for _ in 0..25 {
            c.push_quality(3);
        }
        assert_eq!(c.recent_qualities.len(), 10);
        assert_eq!(c.adjust_level(3), LevelChange::Unchanged);
        assert_eq!(c.recent_qualities.len(), 10);
    }

    #[test]
    fn profile_validation() {
        let mut p = Profile::new("p", LevelPolicy::default());
        p.validate().unwrap();
        p.memories.insert(
            word("cat"),
            WordMemory {
                ef: 1.0,
                ..WordMemory::new(word("cat"))
            },
        );
        assert!(matches!(p.validate(), Err(ProfileError::Easiness { .. })));
        p.memories.clear();
        p.controller.current_level = 0;
        assert_eq!(p.validate(), Err(ProfileError::Level));
        p.controller.current_level = 1;
        p.controller.policy.demote_mean = 5.0;
        assert!(matches!(p.validate(), Err(ProfileError::Policy(_))));
    }
}
