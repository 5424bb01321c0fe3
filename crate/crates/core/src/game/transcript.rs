use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TrialSchedule;
use crate::adaptation::AdaptationConfig;
use crate::agents::SpeakerConfig;
use crate::error::{Error, Result};
use crate::world::{Context, ObjectId, TokenId};

pub const TRANSCRIPT_FORMAT: &str = "refgame-transcript";
pub const TRANSCRIPT_VERSION: u32 = 1;

/// Which side the adaptive agent plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RoleConfig {
    /// Partner speaks, agent selects.
    AgentListener,
    /// Agent speaks, partner selects.
    AgentSpeaker,
}

/// Milliseconds spent by the agent on one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WallTimes {
    pub respond_ms: f64,
    pub adapt_ms: f64,
}

/// One completed trial. Field order is the serialized order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TranscriptRecord {
    pub game_id: String,
    pub trial_index: usize,
    pub repetition_block: usize,
    pub context_object_ids: Vec<ObjectId>,
    pub target_id: ObjectId,
    pub role_config: RoleConfig,
    pub utterance_tokens: Vec<TokenId>,
    pub utterance_text: String,
    pub listener_posterior: Vec<f64>,
    pub choice_id: ObjectId,
    pub correct: bool,
    pub update_applied: bool,
    /// Screen order of the context for display only.
    pub display_permutation: Vec<usize>,
    /// Absent in simulated games so their transcripts are reproducible.
    pub wall_times: Option<WallTimes>,
    pub seed: u64,
}

impl TranscriptRecord {
    pub fn validate(&self) -> Result<()> {
        if self.correct != (self.choice_id == self.target_id) {
            return Err(Error::Format(format!(
                "trial {}: correct flag disagrees with choice",
                self.trial_index
            )));
        }
        if !self.context_object_ids.contains(&self.target_id)
            || !self.context_object_ids.contains(&self.choice_id)
        {
            return Err(Error::Format(format!(
                "trial {}: target or choice outside context",
                self.trial_index
            )));
        }
        if self.listener_posterior.len() != self.context_object_ids.len() {
            return Err(Error::Format(format!(
                "trial {}: posterior has wrong length",
                self.trial_index
            )));
        }
        let total: f64 = self.listener_posterior.iter().sum();
        if (total - 1.0).abs() > 1e-6
            || self
                .listener_posterior
                .iter()
                .any(|p| !(0.0..=1.0).contains(p))
        {
            return Err(Error::Format(format!(
                "trial {}: posterior is not a distribution",
                self.trial_index
            )));
        }
        if self.utterance_tokens.last() != Some(&crate::world::EOS) {
            return Err(Error::Format(format!(
                "trial {}: utterance lacks EOS",
                self.trial_index
            )));
        }
        Ok(())
    }

    /// Posterior mass on the target.
    pub fn target_posterior(&self) -> f64 {
        let pos = self
            .context_object_ids
            .iter()
            .position(|&m| m == self.target_id)
            .expect("validated records hold their target");
        self.listener_posterior[pos]
    }

    /// Content-token count (EOS excluded).
    pub fn utterance_length(&self) -> usize {
        self.utterance_tokens.len() - 1
    }
}

/// Everything needed to replay a game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TranscriptHeader {
    pub format: String,
    pub version: u32,
    pub game_id: String,
    pub role_config: RoleConfig,
    pub context: Context,
    pub schedule: TrialSchedule,
    pub seed: u64,
    pub partner_seed: Option<u64>,
    pub snapshot_hash: String,
    pub adapt: bool,
    pub adaptation: AdaptationConfig,
    pub speaker: SpeakerConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub header: TranscriptHeader,
    pub records: Vec<TranscriptRecord>,
}

impl Transcript {
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let first = lines
            .next()
            .ok_or_else(|| Error::Format("empty transcript".into()))?;
        let header = parse_header(first)?;
        let records = lines
            .map(|l| {
                let r: TranscriptRecord = serde_json::from_str(l)?;
                r.validate()?;
                Ok(r)
            })
            .collect::<Result<Vec<_>>>()?;
        for (i, r) in records.iter().enumerate() {
            if r.trial_index != i || r.game_id != header.game_id {
                return Err(Error::Format(format!("record {i} is out of sequence")));
            }
        }
        Ok(Self { header, records })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(self.to_jsonl().as_bytes())
            .map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut text = String::new();
        for line in BufReader::new(file).lines() {
            text.push_str(&line.map_err(|e| Error::io(path, e))?);
            text.push('\n');
        }
        Self::parse(&text)
    }
}

pub fn parse_header(line: &str) -> Result<TranscriptHeader> {
    let header: TranscriptHeader = serde_json::from_str(line)?;
    if header.format != TRANSCRIPT_FORMAT || header.version != TRANSCRIPT_VERSION {
        return Err(Error::Format(format!(
            "unsupported transcript {} v{}",
            header.format, header.version
        )));
    }
    Ok(header)
}
