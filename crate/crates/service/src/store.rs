//! File-backed session persistence.
//!
//! Each session lives in `<root>/sessions/<id>/`: `manifest.json` written once
//! at creation, and `turns.jsonl` with one completed turn per line. A turn is
//! appended with a single write, so a crash can at worst leave a truncated
//! last line, which is dropped on reload.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use multirag_core::orchestrator::TurnResult;
use multirag_core::{Conversation, PipelineConfig, Turn};

pub const STORE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub id: String,
    pub config: PipelineConfig,
    pub config_ref: String,
    pub created_at: u64,
}

/// One completed turn as persisted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub user: Turn,
    pub assistant: Turn,
    pub result: TurnResult,
    pub at: u64,
}

/// A session as served by `GET /sessions/{id}`. Timestamps are Unix
/// milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub conversation: Conversation,
    pub config: PipelineConfig,
    pub config_ref: String,
    pub created_at: u64,
    pub updated_at: u64,
    pub turn_results: Vec<TurnResult>,
}

impl Session {
    pub fn from_manifest(m: Manifest) -> Self {
        Self {
            conversation: Conversation::new(m.id.clone()),
            id: m.id,
            config: m.config,
            config_ref: m.config_ref,
            created_at: m.created_at,
            updated_at: m.created_at,
            turn_results: Vec::new(),
        }
    }

    pub fn apply(&mut self, record: TurnRecord) {
        self.conversation.turns.push(record.user);
        self.conversation.turns.push(record.assistant);
        self.turn_results.push(record.result);
        self.updated_at = record.at;
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {message}")]
    Corrupt { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone)]
pub struct SessionStore {
    root: PathBuf,
}

impl SessionStore {
    pub fn open(data_dir: &Path) -> Result<Self, StoreError> {
        let root = data_dir.join("sessions");
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        Ok(Self { root })
    }

    fn dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    /// Writes the manifest through a temporary file and creates an empty
    /// turn log.
    pub fn create(&self, manifest: &Manifest) -> Result<(), StoreError> {
        let dir = self.dir(&manifest.id);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let tmp = dir.join("manifest.json.tmp");
        let body = serde_json::to_vec_pretty(manifest).expect("manifest serializes");
        let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(&body).and_then(|_| f.sync_all()).map_err(io_err(&tmp))?;
        let turns = dir.join("turns.jsonl");
        File::create(&turns).map_err(io_err(&turns))?;
        let target = dir.join("manifest.json");
        fs::rename(&tmp, &target).map_err(io_err(&target))
    }

    /// Appends one completed turn and syncs it to disk.
    pub fn append(&self, id: &str, record: &TurnRecord) -> Result<(), StoreError> {
        let path = self.dir(id).join("turns.jsonl");
        let mut line = serde_json::to_vec(record).expect("turn record serializes");
        line.push(b'\n');
        let mut f = OpenOptions::new().append(true).open(&path).map_err(io_err(&path))?;
        f.write_all(&line).and_then(|_| f.sync_data()).map_err(io_err(&path))
    }

    /// Loads one session. A truncated final line is cut from the file and
    /// reported in the returned warning.
    pub fn load(&self, id: &str) -> Result<(Session, Option<String>), StoreError> {
        let dir = self.dir(id);
        let manifest_path = dir.join("manifest.json");
        let bytes = fs::read(&manifest_path).map_err(io_err(&manifest_path))?;
        let manifest: Manifest = serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt {
            path: manifest_path.clone(),
            message: e.to_string(),
        })?;
        if manifest.version != STORE_VERSION {
            return Err(StoreError::Corrupt {
                path: manifest_path,
                message: format!("store version {} is not supported", manifest.version),
            });
        }
        let mut session = Session::from_manifest(manifest);

        let turns_path = dir.join("turns.jsonl");
        let log = fs::read(&turns_path).map_err(io_err(&turns_path))?;
        let complete = log.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
        let mut warning = None;
        if complete < log.len() {
            warning = Some(format!(
                "{}: dropped {} bytes of an unfinished turn",
                turns_path.display(),
                log.len() - complete
            ));
            let f = OpenOptions::new().write(true).open(&turns_path).map_err(io_err(&turns_path))?;
            f.set_len(complete as u64).map_err(io_err(&turns_path))?;
        }
        for (i, line) in log[..complete].split(|b| *b == b'\n').enumerate() {
            if line.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            let record: TurnRecord = serde_json::from_slice(line).map_err(|e| StoreError::Corrupt {
                path: turns_path.clone(),
                message: format!("line {}: {e}", i + 1),
            })?;
            session.apply(record);
        }
        Ok((session, warning))
    }

    /// Every session directory with a manifest. Sessions that fail to load
    /// are skipped and reported.
    pub fn load_all(&self) -> Result<(Vec<Session>, Vec<String>), StoreError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(io_err(&self.root))? {
            let entry = entry.map_err(io_err(&self.root))?;
            if entry.path().join("manifest.json").is_file() {
                ids.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
        ids.sort();
        let mut sessions = Vec::new();
        let mut warnings = Vec::new();
        for id in ids {
            match self.load(&id) {
                Ok((s, w)) => {
                    sessions.push(s);
                    warnings.extend(w);
                }
                Err(e) => warnings.push(format!("session {id} not loaded: {e}")),
            }
        }
        Ok((sessions, warnings))
    }
}
