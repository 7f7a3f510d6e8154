//! Whac-A-Mole bonus round.
//!
//! The whole spawn schedule is drawn up front from the seed: spawn `i` appears
//! at `i * spawn_period_ms` after the start, in a uniformly chosen cell, and
//! stays whackable for `visible_ms`.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::round::seeded_rng;
use crate::Millis;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BonusConfig {
    pub duration_ms: Millis,
    pub grid_cells: usize,
    pub spawn_period_ms: Millis,
    pub visible_ms: Millis,
    pub points_per_whack: u32,
}

impl Default for BonusConfig {
    fn default() -> Self {
        BonusConfig {
            duration_ms: 30_000,
            grid_cells: 9,
            spawn_period_ms: 900,
            visible_ms: 700,
            points_per_whack: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BonusConfigError {
    #[error("visible_ms ({visible}) must be positive and at most spawn_period_ms ({period})")]
    Visibility { visible: Millis, period: Millis },
    #[error("duration_ms ({duration}) must be at least spawn_period_ms ({period})")]
    TooShort { duration: Millis, period: Millis },
    #[error("grid must have at least one cell")]
    EmptyGrid,
}

impl BonusConfig {
    pub fn validate(&self) -> Result<(), BonusConfigError> {
        if self.visible_ms == 0 || self.visible_ms > self.spawn_period_ms {
            return Err(BonusConfigError::Visibility {
                visible: self.visible_ms,
                period: self.spawn_period_ms,
            });
        }
        if self.duration_ms < self.spawn_period_ms {
            return Err(BonusConfigError::TooShort {
                duration: self.duration_ms,
                period: self.spawn_period_ms,
            });
        }
        if self.grid_cells == 0 {
            return Err(BonusConfigError::EmptyGrid);
        }
        Ok(())
    }

    /// Number of spawns whose visibility window fits inside the round.
    pub fn spawn_count(&self) -> usize {
        ((self.duration_ms - self.visible_ms) / self.spawn_period_ms) as usize + 1
    }

    pub fn max_points(&self) -> u32 {
        self.spawn_count() as u32 * self.points_per_whack
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spawn {
    pub t_offset: Millis,
    pub cell: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BonusError {
    #[error("bonus round has finished")]
    BonusFinished,
    #[error("cell {cell} is outside the {grid_cells}-cell grid")]
    CellOutOfRange { cell: usize, grid_cells: usize },
    #[error("bonus round still running: {remaining} ms left")]
    BonusStillRunning { remaining: Millis },
    #[error("time {now} precedes the bonus start {start}")]
    ClockRegression { now: Millis, start: Millis },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BonusState {
    config: BonusConfig,
    start: Millis,
    spawns: Vec<Spawn>,
    hits: BTreeSet<usize>,
    finished: bool,
}

pub fn start_bonus(config: BonusConfig, seed: u64, start: Millis) -> BonusState {
    debug_assert!(
        config.validate().is_ok(),
        "bonus config must be validated by the caller"
    );
    let mut rng = seeded_rng(seed);
    let spawns = (0..config.spawn_count())
        .map(|i| Spawn {
            t_offset: i as Millis * config.spawn_period_ms,
            cell: rng.random_range(0..config.grid_cells),
        })
        .collect();
    BonusState {
        config,
        start,
        spawns,
        hits: BTreeSet::new(),
        finished: false,
    }
}

impl BonusState {
    pub fn config(&self) -> &BonusConfig {
        &self.config
    }

    pub fn start(&self) -> Millis {
        self.start
    }

    pub fn spawns(&self) -> &[Spawn] {
        &self.spawns
    }

    pub fn hits(&self) -> &BTreeSet<usize> {
        &self.hits
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn points(&self) -> u32 {
        self.hits.len() as u32 * self.config.points_per_whack
    }

    pub fn is_expired(&self, now: Millis) -> bool {
        now.saturating_sub(self.start) >= self.config.duration_ms
    }

    /// Index of the spawn whose window contains `now`, if any.
    pub fn visible_spawn(&self, now: Millis) -> Option<usize> {
        let elapsed = now.checked_sub(self.start)?;
        let i = (elapsed / self.config.spawn_period_ms) as usize;
        let spawn = self.spawns.get(i)?;
        (elapsed < spawn.t_offset + self.config.visible_ms).then_some(i)
    }

    pub fn on_whack(&mut self, cell: usize, now: Millis) -> Result<bool, BonusError> {
        if self.finished {
            return Err(BonusError::BonusFinished);
        }
        if cell >= self.config.grid_cells {
            return Err(BonusError::CellOutOfRange {
                cell,
                grid_cells: self.config.grid_cells,
            });
        }
        if now < self.start {
            return Err(BonusError::ClockRegression {
                now,
                start: self.start,
            });
        }
        match self.visible_spawn(now) {
            Some(i) if self.spawns[i].cell == cell && !self.hits.contains(&i) => {
                self.hits.insert(i);
                Ok(true)
            }
            _ => Ok(false),
        }
    }

    /// Closes the round and returns its points. Calling it again returns the
    /// same value.
    pub fn finish_bonus(&mut self, now: Millis) -> Result<u32, BonusError> {
        if !self.finished {
            let elapsed = now.saturating_sub(self.start);
            if elapsed < self.config.duration_ms {
                return Err(BonusError::BonusStillRunning {
                    remaining: self.config.duration_ms - elapsed,
                });
            }
            self.finished = true;
        }
        Ok(self.points())
    }
}
