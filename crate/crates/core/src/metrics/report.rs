use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    accuracy_by_repetition, length_by_repetition, overlap_by_repetition,
    target_posterior_by_repetition, Bootstrap, RepetitionSeries,
};
use crate::error::{Error, Result};
use crate::game::Transcript;

/// By-repetition summaries of a set of games.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricsReport {
    pub games: usize,
    pub bootstrap: Bootstrap,
    pub accuracy: RepetitionSeries,
    pub length: RepetitionSeries,
    pub overlap: RepetitionSeries,
    pub target_posterior: RepetitionSeries,
}

impl MetricsReport {
    pub fn compute(transcripts: &[Transcript], bootstrap: &Bootstrap) -> Result<Self> {
        Ok(Self {
            games: transcripts.len(),
            bootstrap: *bootstrap,
            accuracy: accuracy_by_repetition(transcripts, bootstrap),
            length: length_by_repetition(transcripts, bootstrap),
            overlap: overlap_by_repetition(transcripts, bootstrap)?,
            target_posterior: target_posterior_by_repetition(transcripts, bootstrap),
        })
    }

    pub fn series(&self) -> [&RepetitionSeries; 4] {
        [
            &self.accuracy,
            &self.length,
            &self.overlap,
            &self.target_posterior,
        ]
    }

    /// One row per statistic and repetition.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("statistic\trepetition\tmean\tlower\tupper\tgames\n");
        for s in self.series() {
            for p in &s.points {
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\t{}\n",
                    s.statistic, p.repetition, p.mean, p.lower, p.upper, p.games
                ));
            }
        }
        out
    }

    /// Writes `metrics.json` and `metrics.tsv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = dir.join("metrics.json");
        fs::write(&json, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(&json, e))?;
        let tsv = dir.join("metrics.tsv");
        fs::write(&tsv, self.to_tsv()).map_err(|e| Error::io(&tsv, e))
    }
}
