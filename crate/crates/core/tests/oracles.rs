//! Engine results checked against independently written reference models.

use std::collections::BTreeMap;

use moles_core::learning::WordMemory as GenericMemory;
use moles_core::round::seeded_rng;
use moles_core::{
    compute_quality, load_catalog, normalize_word, pick_decoys, start_bonus, start_round,
    BonusConfig, Effect, LearnerProfile, Letter, LetterPhase, LevelPolicy, Outcome, RoundConfig,
    Word, WordMemory,
};
use num_rational::Ratio;

fn word(s: &str) -> Word {
    normalize_word(s).unwrap()
}

fn letter(c: char) -> Letter {
    Letter::try_from(c).unwrap()
}

/// floor(raw * 5 + 1/2) evaluated in exact rationals with the stated weights.
fn quality_oracle(outcomes: &[Outcome]) -> u8 {
    let weight = |o: &Outcome| match o {
        Outcome::Unaided => Ratio::new(1i64, 1),
        Outcome::AfterChoiceHint => Ratio::new(6, 10),
        Outcome::AfterGiveaway => Ratio::new(0, 1),
    };
    let sum: Ratio<i64> = outcomes.iter().map(weight).sum();
    let raw = sum / Ratio::from_integer(outcomes.len() as i64);
    (raw * Ratio::from_integer(5) + Ratio::new(1, 2))
        .floor()
        .to_integer() as u8
}

fn all_outcome_vectors(len: usize) -> Vec<Vec<Outcome>> {
    (0..3usize.pow(len as u32))
        .map(|mut code| {
            (0..len)
                .map(|_| {
                    let o = Outcome::ALL[code % 3];
                    code /= 3;
                    o
                })
                .collect()
        })
        .collect()
}

#[test]
fn quality_matches_rational_oracle_exhaustively() {
    for len in 1..=10 {
        for outcomes in all_outcome_vectors(len) {
            assert_eq!(
                compute_quality(outcomes.iter().copied()).unwrap(),
                quality_oracle(&outcomes),
                "{outcomes:?}"
            );
        }
    }
}

#[test]
fn quality_seven_unaided_three_hints() {
    let mut outcomes = vec![Outcome::Unaided; 7];
    outcomes.extend([Outcome::AfterChoiceHint; 3]);
    assert_eq!(quality_oracle(&outcomes), 4);
    assert_eq!(compute_quality(outcomes).unwrap(), 4);
}

fn upgrade(o: Outcome) -> Option<Outcome> {
    match o {
        Outcome::AfterGiveaway => Some(Outcome::AfterChoiceHint),
        Outcome::AfterChoiceHint => Some(Outcome::Unaided),
        Outcome::Unaided => None,
    }
}

#[test]
fn quality_is_monotone_under_single_upgrades() {
    for len in 1..=10 {
        for outcomes in all_outcome_vectors(len) {
            let base = compute_quality(outcomes.iter().copied()).unwrap();
            for i in 0..len {
                if let Some(better) = upgrade(outcomes[i]) {
                    let mut up = outcomes.clone();
                    up[i] = better;
                    assert!(compute_quality(up).unwrap() >= base);
                }
            }
        }
    }
}

/// Step-by-step model of an unaided round: each correct letter is worth the
/// unaided points, nothing else happens.
#[test]
fn unaided_occurrence_matches_hand_replay() {
    let config = RoundConfig::default();
    let expected_points: u32 = "occurrence".chars().map(|_| config.points_unaided).sum();
    assert_eq!(expected_points, 100);

    let (mut state, _) = start_round(word("occurrence"), config, 7, 0);
    let mut accepted = String::new();
    for (i, c) in "occurrence".chars().enumerate() {
        let effects = state.handle_key(letter(c), 100 * (i as u64 + 1)).unwrap();
        for e in &effects {
            if let Effect::LetterAccepted { letter, index } = e {
                assert_eq!(*index, i);
                accepted.push(letter.as_char());
            }
        }
    }
    let result = state.result().unwrap();
    assert_eq!(accepted, "occurrence");
    assert_eq!(result.points, expected_points);
    assert!(result.perfect);
}

#[test]
fn replay_event_does_not_change_scoring() {
    let script = |with_replay: bool| {
        let (mut state, _) = start_round(word("occurrence"), RoundConfig::default(), 3, 0);
        let mut t = 0;
        for (i, c) in "occurrence".chars().enumerate() {
            t += 1200;
            if with_replay && i % 3 == 0 {
                state.handle_replay().unwrap();
            }
            if i == 4 {
                t += 5000;
                state.handle_tick(t).unwrap();
                t += 100;
            }
            state.handle_key(letter(c), t).unwrap();
        }
        state
    };
    let plain = script(false);
    let replayed = script(true);
    assert_eq!(plain, replayed);
    assert_eq!(plain.result().unwrap().points, 95);
}

#[test]
fn hinted_choices_replay_from_the_seed() {
    let (mut state, _) = start_round(word("occurrence"), RoundConfig::default(), 7, 0);
    state.handle_tick(5000).unwrap();
    let LetterPhase::ChoiceHint { choices } = state.phase().clone() else {
        panic!("no hint");
    };
    // the first decoy draw comes from a fresh generator seeded the same way
    let mut rng = seeded_rng(7);
    let mut expected = pick_decoys(&mut rng, letter('o'), 2).unwrap();
    expected.push(letter('o'));
    expected.sort();
    assert_eq!(choices, expected);
}

fn sm2_oracle(ef: f64, reps: u32, interval: u32, q: u8, counter: u64) -> (f64, u32, u32, u64) {
    let q = q as f64;
    let mut new_ef = ef + (0.1 - (5.0 - q) * (0.08 + (5.0 - q) * 0.02));
    if new_ef < 1.3 {
        new_ef = 1.3;
    }
    let (reps, interval) = if q >= 3.0 {
        let r = reps + 1;
        let i = if r == 1 {
            1
        } else if r == 2 {
            6
        } else {
            (interval as f64 * new_ef).round() as u32
        };
        (r, i)
    } else {
        (0, 1)
    };
    (new_ef, reps, interval, counter + interval as u64)
}

#[test]
fn sm2_worked_examples() {
    assert_eq!(sm2_oracle(2.5, 0, 1, 5, 0).1, 1);
    assert!((sm2_oracle(2.5, 0, 1, 5, 0).0 - 2.6).abs() < 1e-12);
    assert_eq!(sm2_oracle(2.5, 2, 6, 4, 0).2, 15);
    let m = WordMemory {
        word: word("cat"),
        ef: 2.5,
        repetitions: 2,
        interval: 6,
        due_at: 0,
    };
    let next = m.update(4, 0).unwrap();
    assert_eq!((next.repetitions, next.interval), (3, 15));
}

#[test]
fn next_word_comparator_brute_force() {
    let catalog = load_catalog(
        br#"{"lists":[{"id":"a","name":"A","level":1,"words":["ant","bee","cow","dog","eel"]}]}"#,
    )
    .unwrap();
    let words = ["ant", "bee", "cow", "dog", "eel"];
    let dues = [3u64, 5, 8, 9, 12];

    // every subset of seen words, every due assignment from a small grid
    for mask in 1u32..(1 << words.len()) {
        for assign in 0..(dues.len().pow(3)) {
            let mut profile = LearnerProfile::new("p", LevelPolicy::default());
            profile.presentation_counter = 8;
            let mut seen = Vec::new();
            let mut code = assign;
            for (i, w) in words.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    let due = dues[code % dues.len()];
                    code /= dues.len();
                    let mut m = GenericMemory::new(word(w));
                    m.due_at = due;
                    profile.memories.insert(word(w), m);
                    seen.push((*w, due));
                }
            }

            // reference: linear scans in plain list form
            let mut due_now: Vec<(u64, &str)> = seen
                .iter()
                .filter(|(_, d)| *d <= 8)
                .map(|(w, d)| (*d, *w))
                .collect();
            due_now.sort();
            let expected = if let Some((_, w)) = due_now.first() {
                w.to_string()
            } else if let Some(w) = words.iter().find(|w| !seen.iter().any(|(s, _)| s == *w)) {
                w.to_string()
            } else {
                let mut all: Vec<(u64, &str)> = seen.iter().map(|(w, d)| (*d, *w)).collect();
                all.sort();
                all[0].1.to_string()
            };
            assert_eq!(
                profile.next_word(&catalog).unwrap().as_str(),
                expected,
                "{seen:?}"
            );
        }
    }
}

#[test]
fn bonus_spawn_count_arithmetic() {
    let config = BonusConfig::default();
    assert_eq!((30_000 - 700) / 900 + 1, 33);
    assert_eq!(config.spawn_count(), 33);
    for (duration, period, visible) in [
        (900, 900, 700),
        (5000, 1000, 1000),
        (10_000, 300, 1),
        (999, 500, 499),
    ] {
        let config = BonusConfig {
            duration_ms: duration,
            spawn_period_ms: period,
            visible_ms: visible,
            ..BonusConfig::default()
        };
        let state = start_bonus(config, 1, 0);
        // count the offsets whose window ends inside the round
        let brute = (0..)
            .take_while(|i| i * period + visible <= duration)
            .count();
        assert_eq!(state.spawns().len(), brute);
    }
}

#[test]
fn bonus_hits_match_window_replay() {
    let config = BonusConfig {
        duration_ms: 3000,
        spawn_period_ms: 500,
        visible_ms: 300,
        grid_cells: 4,
        ..BonusConfig::default()
    };
    for seed in 0..20 {
        let schedule = start_bonus(config.clone(), seed, 100).spawns().to_vec();
        for t in (100..3100).step_by(37) {
            for cell in 0..4 {
                let mut state = start_bonus(config.clone(), seed, 100);
                let hit = state.on_whack(cell, t).unwrap();
                let expected = schedule
                    .iter()
                    .any(|s| s.cell == cell && s.t_offset <= t - 100 && t - 100 < s.t_offset + 300);
                assert_eq!(hit, expected, "seed {seed} t {t} cell {cell}");
            }
        }
    }
}

#[test]
fn bonus_points_bounded() {
    let mut state = start_bonus(BonusConfig::default(), 77, 0);
    let mut per_cell_hits = BTreeMap::new();
    for t in (0..30_000).step_by(50) {
        for cell in 0..9 {
            if state.on_whack(cell, t).unwrap() {
                *per_cell_hits.entry(cell).or_insert(0) += 1;
            }
        }
    }
    let points = state.finish_bonus(30_000).unwrap();
    assert_eq!(points, 165);
    assert_eq!(per_cell_hits.values().sum::<i32>(), 33);
}
