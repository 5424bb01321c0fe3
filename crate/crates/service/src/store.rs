//! Append-only transcript files, one per session: a header line written at
//! creation, then one line per completed trial.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use refgame::captioner::{save_checkpoint, CaptionerParams};
use refgame::game::{RoleConfig, Transcript, TranscriptHeader, TranscriptRecord};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

#[derive(Debug, Clone)]
pub struct TranscriptStore {
    dir: PathBuf,
}

impl TranscriptStore {
    pub fn open(data_dir: &Path) -> Result<Self> {
        let dir = data_dir.join("sessions");
        fs::create_dir_all(&dir).map_err(|e| ServiceError::storage(&dir, e))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Session ids are used as file names, so only a safe alphabet is valid.
    pub fn valid_id(id: &str) -> bool {
        !id.is_empty()
            && id.len() <= 64
            && id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
    }

    pub fn transcript_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.jsonl"))
    }

    pub fn checkpoint_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.checkpoint"))
    }

    pub fn exists(&self, id: &str) -> bool {
        Self::valid_id(id) && self.transcript_path(id).is_file()
    }

    /// Writes the header of a new session. Never replaces an existing file.
    pub fn create(&self, header: &TranscriptHeader) -> Result<()> {
        let path = self.transcript_path(&header.game_id);
        let mut f = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| ServiceError::storage(&path, e))?;
        let line = serde_json::to_string(header).expect("header serializes");
        writeln!(f, "{line}")
            .and_then(|_| f.sync_data())
            .map_err(|e| ServiceError::storage(&path, e))
    }

    pub fn append(&self, record: &TranscriptRecord) -> Result<()> {
        let path = self.transcript_path(&record.game_id);
        let mut f = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(|e| ServiceError::storage(&path, e))?;
        let line = serde_json::to_string(record).expect("record serializes");
        writeln!(f, "{line}")
            .and_then(|_| f.sync_data())
            .map_err(|e| ServiceError::storage(&path, e))
    }

    pub fn read_text(&self, id: &str) -> Result<String> {
        let path = self.transcript_path(id);
        fs::read_to_string(&path).map_err(|e| ServiceError::storage(&path, e))
    }

    pub fn load(&self, id: &str) -> Result<Transcript> {
        Ok(Transcript::read(&self.transcript_path(id))?)
    }

    pub fn save_checkpoint(&self, id: &str, params: &CaptionerParams) -> Result<()> {
        Ok(save_checkpoint(params, &self.checkpoint_path(id))?)
    }

    /// Ids of every stored session, sorted.
    pub fn ids(&self) -> Result<Vec<String>> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.dir).map_err(|e| ServiceError::storage(&self.dir, e))? {
            let path = entry
                .map_err(|e| ServiceError::storage(&self.dir, e))?
                .path();
            if path.extension().is_some_and(|e| e == "jsonl") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    ids.push(stem.to_string());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }

    /// Lines in a stored transcript, header included.
    pub fn line_count(&self, id: &str) -> Result<usize> {
        let path = self.transcript_path(id);
        let f = File::open(&path).map_err(|e| ServiceError::storage(&path, e))?;
        let text = std::io::read_to_string(f).map_err(|e| ServiceError::storage(&path, e))?;
        Ok(text.lines().count())
    }
}

/// Progress of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionSummary {
    pub session_id: String,
    pub role_config: RoleConfig,
    pub context_id: String,
    pub trials: usize,
    pub trials_completed: usize,
    pub correct: usize,
    pub accuracy: Option<f64>,
    pub finished: bool,
    /// Present while the session is loaded.
    pub params_hash: Option<String>,
}

impl SessionSummary {
    pub fn from_transcript(t: &Transcript, params_hash: Option<String>) -> Self {
        let done = t.records.len();
        let correct = t.records.iter().filter(|r| r.correct).count();
        Self {
            session_id: t.header.game_id.clone(),
            role_config: t.header.role_config,
            context_id: t.header.context.id.clone(),
            trials: t.header.schedule.len(),
            trials_completed: done,
            correct,
            accuracy: (done > 0).then(|| correct as f64 / done as f64),
            finished: done == t.header.schedule.len(),
            params_hash,
        }
    }
}
