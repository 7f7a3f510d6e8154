use std::path::Path;

use moles_core::bonus::BonusConfigError;
use moles_core::learning::LevelPolicyError;
use moles_core::round::RoundConfigError;
use moles_core::{BonusConfig, LevelPolicy, RoundConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Every tunable constant of a session. A config file only needs to name the
/// values it overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    pub round: RoundConfig,
    pub bonus: BonusConfig,
    pub level: LevelPolicy,
    /// Consecutive perfect rounds that trigger the bonus round.
    pub streak_for_bonus: u32,
    /// How often the server advances session timers.
    pub tick_interval_ms: u64,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            round: RoundConfig::default(),
            bonus: BonusConfig::default(),
            level: LevelPolicy::default(),
            streak_for_bonus: 3,
            tick_interval_ms: 50,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing {path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Round(#[from] RoundConfigError),
    #[error(transparent)]
    Bonus(#[from] BonusConfigError),
    #[error(transparent)]
    Level(#[from] LevelPolicyError),
    #[error("streak_for_bonus must be at least 1")]
    Streak,
    #[error("tick_interval_ms must be at least 1")]
    TickInterval,
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.round.validate()?;
        self.bonus.validate()?;
        self.level.validate()?;
        if self.streak_for_bonus == 0 {
            return Err(ConfigError::Streak);
        }
        if self.tick_interval_ms == 0 {
            return Err(ConfigError::TickInterval);
        }
        Ok(())
    }

    /// Loads a JSON or (by `.toml` extension) TOML config file and validates it.
    pub fn load(path: &Path) -> Result<GameConfig, ConfigError> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: display.clone(),
            source,
        })?;
        let config: GameConfig = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| ConfigError::Parse {
                path: display,
                message: e.to_string(),
            })?
        } else {
            serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
                path: display,
                message: e.to_string(),
            })?
        };
        config.validate()?;
        Ok(config)
    }
}
