use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type TokenId = usize;

pub const BOS: TokenId = 0;
pub const EOS: TokenId = 1;
pub const UNK: TokenId = 2;

const SPECIALS: [&str; 3] = ["<bos>", "<eos>", "<unk>"];
/// Closed-class words that may appear in captions and free text.
pub const FUNCTION_WORDS: [&str; 3] = ["the", "a", "with"];

/// One attribute slot, e.g. `color`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub name: String,
    pub values: Vec<String>,
    /// Probability that a realized caption mentions this slot.
    pub mention_prob: f64,
}

/// Ordered attribute slots. The last slot is the head noun.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub slots: Vec<Slot>,
    /// Probability of the leading determiner.
    pub determiner_prob: f64,
}

/// Mention probability of the size and pattern words in the default schema.
pub const RARE_MENTION_PROB: f64 = 0.02;

impl Default for AttributeSchema {
    fn default() -> Self {
        let slot = |name: &str, values: &[&str], mention_prob: f64| Slot {
            name: name.to_string(),
            values: values.iter().map(|s| s.to_string()).collect(),
            mention_prob,
        };
        Self {
            slots: vec![
                slot("size", &["small", "medium", "big"], RARE_MENTION_PROB),
                slot(
                    "color",
                    &[
                        "red", "orange", "yellow", "green", "blue", "purple", "black", "white",
                    ],
                    0.9,
                ),
                slot(
                    "pattern",
                    &["plain", "striped", "dotted", "checkered"],
                    RARE_MENTION_PROB,
                ),
                slot(
                    "shape",
                    &[
                        "square", "circle", "triangle", "star", "heart", "diamond", "cross",
                        "pentagon",
                    ],
                    1.0,
                ),
            ],
            determiner_prob: 0.7,
        }
    }
}

impl AttributeSchema {
    pub fn validate(&self) -> Result<()> {
        if self.slots.is_empty() {
            return Err(Error::Config("schema has no slots".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for w in FUNCTION_WORDS {
            seen.insert(w.to_string());
        }
        for slot in &self.slots {
            if slot.values.is_empty() {
                return Err(Error::Config(format!("slot {} has no values", slot.name)));
            }
            if !(0.0..=1.0).contains(&slot.mention_prob) {
                return Err(Error::Config(format!(
                    "slot {} mention probability {} outside [0,1]",
                    slot.name, slot.mention_prob
                )));
            }
            for v in &slot.values {
                if !seen.insert(v.clone()) {
                    return Err(Error::Config(format!("attribute word {v} is not unique")));
                }
            }
        }
        if self.head().mention_prob != 1.0 {
            return Err(Error::Config(
                "head-noun slot must always be mentioned".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.determiner_prob) {
            return Err(Error::Config("determiner probability outside [0,1]".into()));
        }
        Ok(())
    }

    pub fn head(&self) -> &Slot {
        self.slots.last().expect("validated schema has slots")
    }

    pub fn head_slot(&self) -> usize {
        self.slots.len() - 1
    }

    /// Length of the concatenated one-hot feature vector.
    pub fn feature_dim(&self) -> usize {
        self.slots.iter().map(|s| s.values.len()).sum()
    }

    pub fn combinations(&self) -> usize {
        self.slots.iter().map(|s| s.values.len()).product()
    }

    /// Offset of each slot's block within the feature vector.
    pub fn block_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.slots.len());
        let mut acc = 0;
        for s in &self.slots {
            offsets.push(acc);
            acc += s.values.len();
        }
        offsets
    }
}

/// Token table: specials, function words, then every attribute word in slot
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    words: Vec<String>,
    /// `slot_of[token]` is the attribute slot a word belongs to, if any.
    slot_of: Vec<Option<usize>>,
    /// `attribute_token[slot][value]`.
    attribute_token: Vec<Vec<TokenId>>,
}

impl Vocabulary {
    pub fn from_schema(schema: &AttributeSchema) -> Self {
        let mut words: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        words.extend(FUNCTION_WORDS.iter().map(|s| s.to_string()));
        let mut slot_of = vec![None; words.len()];
        let mut attribute_token = Vec::new();
        for (si, slot) in schema.slots.iter().enumerate() {
            let mut ids = Vec::new();
            for v in &slot.values {
                ids.push(words.len());
                words.push(v.clone());
                slot_of.push(Some(si));
            }
            attribute_token.push(ids);
        }
        Self {
            words,
            slot_of,
            attribute_token,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, token: TokenId) -> &str {
        self.words.get(token).map(String::as_str).unwrap_or("<unk>")
    }

    pub fn token(&self, word: &str) -> Option<TokenId> {
        self.words.iter().position(|w| w == word)
    }

    pub fn the(&self) -> TokenId {
        SPECIALS.len()
    }

    pub fn slot_of(&self, token: TokenId) -> Option<usize> {
        self.slot_of.get(token).copied().flatten()
    }

    /// Value index within its slot for an attribute token.
    pub fn value_of(&self, token: TokenId) -> Option<(usize, usize)> {
        let slot = self.slot_of(token)?;
        let value = self.attribute_token[slot]
            .iter()
            .position(|&t| t == token)?;
        Some((slot, value))
    }

    pub fn slot_count(&self) -> usize {
        self.attribute_token.len()
    }

    pub fn is_head_slot(&self, slot: usize) -> bool {
        slot + 1 == self.attribute_token.len()
    }

    pub fn attribute_token(&self, slot: usize, value: usize) -> TokenId {
        self.attribute_token[slot][value]
    }

    pub fn is_function_word(&self, token: TokenId) -> bool {
        (SPECIALS.len()..SPECIALS.len() + FUNCTION_WORDS.len()).contains(&token)
    }

    /// Whitespace tokenization with `<unk>` substitution. Returns the tokens
    /// and the words that were not in the vocabulary.
    pub fn tokenize(&self, text: &str) -> (Vec<TokenId>, Vec<String>) {
        let mut unknown = Vec::new();
        let tokens = text
            .split_whitespace()
            .map(|w| {
                let lower = w
                    .trim_matches(|c: char| !c.is_alphanumeric())
                    .to_lowercase();
                match self.token(&lower) {
                    Some(t) if t > UNK => t,
                    _ => {
                        unknown.push(lower);
                        UNK
                    }
                }
            })
            .collect();
        (tokens, unknown)
    }

    pub fn render(&self, tokens: &[TokenId]) -> String {
        tokens
            .iter()
            .filter(|&&t| t != EOS && t != BOS)
            .map(|&t| self.word(t))
            .collect::<Vec<_>>()
            .join(" ")
    }
}
