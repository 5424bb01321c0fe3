use std::collections::{BTreeMap, HashSet};
use std::hash::Hash;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Transcript, TranscriptRecord};
use crate::world::TokenId;

/// Percentile bootstrap over games.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bootstrap {
    pub resamples: usize,
    pub seed: u64,
    /// Coverage of the interval.
    pub level: f64,
}

impl Default for Bootstrap {
    fn default() -> Self {
        Self {
            resamples: 1000,
            seed: 0,
            level: 0.95,
        }
    }
}

/// Mean of one statistic at one repetition, with its interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RepetitionPoint {
    pub repetition: usize,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    /// Games contributing to this repetition.
    pub games: usize,
}

/// A statistic by repetition block, repetitions contiguous from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionSeries {
    pub statistic: String,
    pub points: Vec<RepetitionPoint>,
}

impl RepetitionSeries {
    pub fn mean_at(&self, repetition: usize) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.repetition == repetition)
            .map(|p| p.mean)
    }

    pub fn means(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mean).collect()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("repetition\tmean\tlower\tupper\tgames\n");
        for p in &self.points {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                p.repetition, p.mean, p.lower, p.upper, p.games
            ));
        }
        out
    }
}

/// Averages `stat` within each game and repetition, then across games.
/// Games missing a repetition do not count toward it.
pub fn by_repetition(
    statistic: &str,
    per_game: &[BTreeMap<usize, f64>],
    bootstrap: &Bootstrap,
) -> RepetitionSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(bootstrap.seed);
    let mut points = Vec::new();
    for repetition in 1.. {
        let values: Vec<f64> = per_game
            .iter()
            .filter_map(|g| g.get(&repetition).copied())
            .collect();
        if values.is_empty() {
            break;
        }
        let mean = mean(&values);
        let (lower, upper) = interval(&values, mean, bootstrap, &mut rng);
        points.push(RepetitionPoint {
            repetition,
            mean,
            lower,
            upper,
            games: values.len(),
        });
    }
    RepetitionSeries {
        statistic: statistic.to_string(),
        points,
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn interval(values: &[f64], centre: f64, b: &Bootstrap, rng: &mut ChaCha8Rng) -> (f64, f64) {
    if b.resamples == 0 || values.len() == 1 {
        return (centre, centre);
    }
    let mut means: Vec<f64> = (0..b.resamples)
        .map(|_| {
            let total: f64 = (0..values.len())
                .map(|_| values[rng.gen_range(0..values.len())])
                .sum();
            total / values.len() as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - b.level.clamp(0.0, 1.0)) / 2.0;
    let at = |q: f64| means[((q * (means.len() - 1) as f64).round() as usize).min(means.len() - 1)];
    (at(tail).min(centre), at(1.0 - tail).max(centre))
}

/// Per-game mean of `stat` over the records of each repetition block.
pub fn per_game<F>(transcripts: &[Transcript], stat: F) -> Vec<BTreeMap<usize, f64>>
where
    F: Fn(&TranscriptRecord) -> f64,
{
    transcripts
        .iter()
        .map(|t| {
            let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
            for r in &t.records {
                let e = sums.entry(r.repetition_block).or_default();
                e.0 += stat(r);
                e.1 += 1;
            }
            sums.into_iter()
                .map(|(k, (s, n))| (k, s / n as f64))
                .collect()
        })
        .collect()
}

pub fn accuracy_by_repetition(
    transcripts: &[Transcript],
    bootstrap: &Bootstrap,
) -> RepetitionSeries {
    by_repetition(
        "accuracy",
        &per_game(transcripts, |r| r.correct as u8 as f64),
        bootstrap,
    )
}

/// Content-token count of the utterance.
pub fn length_by_repetition(transcripts: &[Transcript], bootstrap: &Bootstrap) -> RepetitionSeries {
    by_repetition(
        "length",
        &per_game(transcripts, |r| r.utterance_length() as f64),
        bootstrap,
    )
}

pub fn target_posterior_by_repetition(
    transcripts: &[Transcript],
    bootstrap: &Bootstrap,
) -> RepetitionSeries {
    by_repetition(
        "targetPosterior",
        &per_game(transcripts, |r| r.target_posterior()),
        bootstrap,
    )
}

/// Shared fraction of two word sets: `|a ∩ b| / min(|a|, |b|)`.
pub fn overlap<T: Eq + Hash>(a: &[T], b: &[T]) -> Result<f64> {
    let a: HashSet<&T> = a.iter().collect();
    let b: HashSet<&T> = b.iter().collect();
    if a.is_empty() || b.is_empty() {
        return Err(Error::Input(
            "overlap needs two non-empty utterances".into(),
        ));
    }
    Ok(a.intersection(&b).count() as f64 / a.len().min(b.len()) as f64)
}

/// Mean pairwise overlap between the utterances of each repetition block,
/// averaged within a game before across games. Empty utterances are skipped.
pub fn overlap_by_repetition(
    transcripts: &[Transcript],
    bootstrap: &Bootstrap,
) -> Result<RepetitionSeries> {
    let mut games = Vec::with_capacity(transcripts.len());
    for t in transcripts {
        let mut blocks: BTreeMap<usize, Vec<&[TokenId]>> = BTreeMap::new();
        for r in &t.records {
            let content = &r.utterance_tokens[..r.utterance_tokens.len().saturating_sub(1)];
            let block = blocks.entry(r.repetition_block).or_default();
            if !content.is_empty() {
                block.push(content);
            }
        }
        let mut game = BTreeMap::new();
        for (rep, utts) in blocks {
            let mut total = 0.0;
            let mut pairs = 0;
            for i in 0..utts.len() {
                for j in i + 1..utts.len() {
                    total += overlap(utts[i], utts[j])?;
                    pairs += 1;
                }
            }
            if pairs > 0 {
                game.insert(rep, total / pairs as f64);
            }
        }
        games.push(game);
    }
    Ok(by_repetition("overlap", &games, bootstrap))
}
