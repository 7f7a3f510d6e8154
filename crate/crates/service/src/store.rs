//! On-disk persistence under a data directory:
//!
//! ```text
//! <data-dir>/players/<player_id>   one JSON profile document per player
//! <data-dir>/logs/<session_id>     line-delimited session log
//! ```

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use moles_core::{LearnerProfile, LevelPolicy};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::log::SessionLog;

pub const PROFILE_FORMAT: &str = "moles-profile";
pub const PROFILE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("corrupt profile {path}: {reason}")]
    CorruptProfile { path: PathBuf, reason: String },
    #[error("invalid identifier {0:?}: use 1-64 characters from [A-Za-z0-9_-]")]
    InvalidId(String),
}

impl StoreError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> StoreError {
        StoreError::Io {
            path: path.to_owned(),
            source,
        }
    }
}

/// Player and session ids double as file names, so they are restricted to a
/// safe token alphabet.
pub fn validate_id(id: &str) -> Result<(), StoreError> {
    let ok = (1..=64).contains(&id.len())
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-');
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidId(id.to_owned()))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDocument {
    format: String,
    version: u32,
    profile: LearnerProfile,
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    player_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl Store {
    /// Opens (creating if needed) a data directory.
    pub fn open(root: impl Into<PathBuf>) -> Result<Store, StoreError> {
        let root = root.into();
        for dir in [root.join("players"), root.join("logs")] {
            fs::create_dir_all(&dir).map_err(|e| StoreError::io(&dir, e))?;
        }
        Ok(Store {
            root,
            player_locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn profile_path(&self, player_id: &str) -> PathBuf {
        self.root.join("players").join(player_id)
    }

    pub fn log_path(&self, session_id: &str) -> PathBuf {
        self.root.join("logs").join(session_id)
    }

    fn player_lock(&self, player_id: &str) -> Arc<Mutex<()>> {
        self.player_locks
            .lock()
            .entry(player_id.to_owned())
            .or_default()
            .clone()
    }

    /// Loads a profile, or returns a fresh one using `policy` when the player
    /// has never been saved.
    pub fn load_profile(
        &self,
        player_id: &str,
        policy: &LevelPolicy,
    ) -> Result<LearnerProfile, StoreError> {
        validate_id(player_id)?;
        let path = self.profile_path(player_id);
        let lock = self.player_lock(player_id);
        let _guard = lock.lock();
        let bytes = match fs::read(&path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Ok(LearnerProfile::new(player_id, policy.clone()));
            }
            Err(e) => return Err(StoreError::io(&path, e)),
        };
        decode_profile(&bytes, player_id)
            .map_err(|reason| StoreError::CorruptProfile { path, reason })
    }

    /// Writes a profile atomically (temp file, then rename).
    pub fn persist_profile(&self, profile: &LearnerProfile) -> Result<(), StoreError> {
        validate_id(&profile.player_id)?;
        let path = self.profile_path(&profile.player_id);
        let tmp = path.with_extension("tmp");
        let lock = self.player_lock(&profile.player_id);
        let _guard = lock.lock();
        let bytes = encode_profile(profile);
        let write = || -> std::io::Result<()> {
            let mut file = fs::File::create(&tmp)?;
            file.write_all(&bytes)?;
            file.sync_all()?;
            fs::rename(&tmp, &path)
        };
        write().map_err(|e| StoreError::io(&path, e))
    }

    pub fn create_log(&self, session_id: &str) -> Result<SessionLog, StoreError> {
        validate_id(session_id)?;
        SessionLog::create(self.log_path(session_id))
    }
}

pub fn encode_profile(profile: &LearnerProfile) -> Vec<u8> {
    let doc = ProfileDocument {
        format: PROFILE_FORMAT.to_owned(),
        version: PROFILE_VERSION,
        profile: profile.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("profiles always serialize");
    bytes.push(b'\n');
    bytes
}

pub fn decode_profile(bytes: &[u8], player_id: &str) -> Result<LearnerProfile, String> {
    let doc: ProfileDocument = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
    if doc.format != PROFILE_FORMAT || doc.version != PROFILE_VERSION {
        return Err(format!(
            "unsupported document {} v{}",
            doc.format, doc.version
        ));
    }
    if doc.profile.player_id != player_id {
        return Err(format!("document belongs to {:?}", doc.profile.player_id));
    }
    doc.profile.validate().map_err(|e| e.to_string())?;
    Ok(doc.profile)
}
