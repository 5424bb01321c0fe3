use serde::{Deserialize, Serialize};

use crate::captioner::Utterance;
use crate::world::{TokenId, Vocabulary, UNK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum AugmentMode {
    /// Suffixes of a template caption down to the bare head noun.
    Grammar,
    /// Noun-phrase chunks of arbitrary text.
    FreeText,
}

/// An utterance and its distinct sub-phrases.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationSet {
    full: Utterance,
    phrases: Vec<Utterance>,
}

impl AugmentationSet {
    pub fn singleton(full: Utterance) -> Self {
        Self {
            full,
            phrases: Vec::new(),
        }
    }

    fn from_parts(full: Utterance, candidates: impl IntoIterator<Item = Vec<TokenId>>) -> Self {
        let mut phrases: Vec<Utterance> = Vec::new();
        for c in candidates {
            if c.is_empty() || c == full.content() {
                continue;
            }
            let u = Utterance::from_content(&c).expect("chunks hold content tokens only");
            if !phrases.contains(&u) {
                phrases.push(u);
            }
        }
        Self { full, phrases }
    }

    pub fn full(&self) -> &Utterance {
        &self.full
    }

    /// Sub-phrases other than the full utterance.
    pub fn phrases(&self) -> &[Utterance] {
        &self.phrases
    }

    /// The full utterance followed by every sub-phrase.
    pub fn iter(&self) -> impl Iterator<Item = &Utterance> {
        std::iter::once(&self.full).chain(&self.phrases)
    }

    pub fn len(&self) -> usize {
        1 + self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

pub fn augment(utterance: &Utterance, mode: AugmentMode, vocab: &Vocabulary) -> AugmentationSet {
    match mode {
        AugmentMode::Grammar => {
            let content = utterance.content();
            let suffixes = (1..content.len()).map(|k| content[k..].to_vec());
            AugmentationSet::from_parts(utterance.clone(), suffixes)
        }
        AugmentMode::FreeText => {
            let words: Vec<Word> = utterance
                .content()
                .iter()
                .map(|&t| Word::from_token(t, vocab))
                .collect();
            let chunks = chunk(&words)
                .into_iter()
                .map(|(s, e)| tokens_of(&words[s..e]));
            AugmentationSet::from_parts(utterance.clone(), chunks)
        }
    }
}

/// Free-text augmentation of raw partner input. Unknown words become UNK.
pub fn augment_text(text: &str, vocab: &Vocabulary) -> Option<AugmentationSet> {
    let words: Vec<Word> = text
        .split_whitespace()
        .map(|w| {
            let lower = w
                .trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase();
            Word::from_text(lower, vocab)
        })
        .filter(|w| !w.text.is_empty())
        .collect();
    if words.is_empty() {
        return None;
    }
    let full = Utterance::from_content(&tokens_of(&words)).ok()?;
    let chunks = chunk(&words)
        .into_iter()
        .map(|(s, e)| tokens_of(&words[s..e]));
    Some(AugmentationSet::from_parts(full, chunks))
}

/// Noun-phrase spans of `text` as word lists, for inspection.
pub fn noun_phrases(text: &str, vocab: &Vocabulary) -> Vec<String> {
    let words: Vec<Word> = text
        .split_whitespace()
        .map(|w| {
            Word::from_text(
                w.trim_matches(|c: char| !c.is_alphanumeric())
                    .to_lowercase(),
                vocab,
            )
        })
        .filter(|w| !w.text.is_empty())
        .collect();
    chunk(&words)
        .into_iter()
        .map(|(s, e)| {
            words[s..e]
                .iter()
                .map(|w| w.text.as_str())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Det,
    Adj,
    Noun,
    With,
    Other,
}

#[derive(Debug, Clone)]
struct Word {
    text: String,
    token: TokenId,
    class: Class,
}

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "some", "each", "every", "another", "one",
    "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "many", "several",
    "his", "her", "its", "their", "my", "your", "our",
];

const CLOSED_CLASS: &[&str] = &[
    "is",
    "are",
    "was",
    "were",
    "be",
    "been",
    "am",
    "has",
    "have",
    "had",
    "do",
    "does",
    "did",
    "on",
    "in",
    "at",
    "of",
    "to",
    "from",
    "by",
    "for",
    "near",
    "next",
    "under",
    "over",
    "above",
    "below",
    "behind",
    "beside",
    "and",
    "or",
    "but",
    "not",
    "no",
    "it",
    "he",
    "she",
    "they",
    "there",
    "here",
    "which",
    "who",
    "what",
    "very",
    "too",
    "also",
    "like",
    "just",
    "only",
    "than",
    "then",
    "i",
    "you",
    "we",
    "me",
    "left",
    "right",
    "top",
    "bottom",
    "other",
    "same",
    "different",
    "again",
    "ok",
    "yes",
];

impl Word {
    fn from_token(token: TokenId, vocab: &Vocabulary) -> Self {
        let text = vocab.word(token).to_string();
        let class = if token == UNK {
            Class::Noun
        } else {
            classify(&text, Some(token), vocab)
        };
        Self { text, token, class }
    }

    fn from_text(text: String, vocab: &Vocabulary) -> Self {
        let token = match vocab.token(&text) {
            Some(t) if t > UNK => Some(t),
            _ => None,
        };
        let class = classify(&text, token, vocab);
        Self {
            token: token.unwrap_or(UNK),
            text,
            class,
        }
    }
}

fn classify(text: &str, token: Option<TokenId>, vocab: &Vocabulary) -> Class {
    if text == "with" {
        return Class::With;
    }
    if DETERMINERS.contains(&text) {
        return Class::Det;
    }
    if let Some(t) = token {
        if let Some(slot) = vocab.slot_of(t) {
            return if vocab.is_head_slot(slot) {
                Class::Noun
            } else {
                Class::Adj
            };
        }
        return Class::Other;
    }
    let verbal = text.len() > 4 && (text.ends_with("ing") || text.ends_with("ed"));
    if CLOSED_CLASS.contains(&text) || verbal || text.chars().any(|c| !c.is_alphabetic()) {
        Class::Other
    } else {
        Class::Noun
    }
}

fn tokens_of(words: &[Word]) -> Vec<TokenId> {
    words.iter().map(|w| w.token).collect()
}

/// End of a `det? adj* noun` match starting at `i`.
fn match_np(words: &[Word], i: usize) -> Option<usize> {
    let mut j = i;
    if words.get(j).map(|w| w.class) == Some(Class::Det) {
        j += 1;
    }
    while words.get(j).map(|w| w.class) == Some(Class::Adj) {
        j += 1;
    }
    (words.get(j).map(|w| w.class) == Some(Class::Noun)).then_some(j + 1)
}

/// Maximal `NP (with NP)?` spans, each followed by its inner NPs: the
/// attached parts and every NP left after dropping leading determiners and
/// modifiers.
fn chunk(words: &[Word]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut i = 0;
    while i < words.len() {
        let Some(end) = match_np(words, i) else {
            i += 1;
            continue;
        };
        let attached = (words.get(end).map(|w| w.class) == Some(Class::With))
            .then(|| match_np(words, end + 1))
            .flatten();
        match attached {
            Some(outer) => {
                spans.push((i, outer));
                spans.extend((i..end).map(|k| (k, end)));
                spans.extend((end + 1..outer).map(|k| (k, outer)));
                i = outer;
            }
            None => {
                spans.extend((i..end).map(|k| (k, end)));
                i = end;
            }
        }
    }
    spans
}
