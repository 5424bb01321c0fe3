use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::{TokenId, Vocabulary, BOS, EOS};

/// Token sequence terminated by EOS. BOS is implicit and never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Utterance {
    tokens: Vec<TokenId>,
}

impl Utterance {
    /// Builds from content tokens, appending EOS.
    pub fn from_content(content: &[TokenId]) -> Result<Self> {
        if content.iter().any(|&t| t == BOS || t == EOS) {
            return Err(Error::Input(
                "content tokens may not contain BOS or EOS".into(),
            ));
        }
        let mut tokens = content.to_vec();
        tokens.push(EOS);
        Ok(Self { tokens })
    }

    /// Accepts a full sequence that already ends in EOS.
    pub fn from_tokens(tokens: Vec<TokenId>) -> Result<Self> {
        match tokens.split_last() {
            Some((&EOS, body)) if !body.iter().any(|&t| t == BOS || t == EOS) => {
                Ok(Self { tokens })
            }
            _ => Err(Error::Input(
                "utterance must end with EOS and contain no other specials".into(),
            )),
        }
    }

    pub fn parse(text: &str, vocab: &Vocabulary) -> Result<(Self, Vec<String>)> {
        let (tokens, unknown) = vocab.tokenize(text);
        if tokens.is_empty() {
            return Err(Error::Input("empty utterance".into()));
        }
        Ok((Self::from_content(&tokens)?, unknown))
    }

    /// All tokens including the trailing EOS.
    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn content(&self) -> &[TokenId] {
        &self.tokens[..self.tokens.len() - 1]
    }

    /// Scored length: content tokens plus EOS.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Number of content words.
    pub fn word_count(&self) -> usize {
        self.tokens.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.word_count() == 0
    }

    pub fn render(&self, vocab: &Vocabulary) -> String {
        vocab.render(&self.tokens)
    }

    pub fn check_vocab(&self, vocab_size: usize) -> Result<()> {
        if let Some(t) = self.tokens.iter().find(|&&t| t >= vocab_size) {
            return Err(Error::Input(format!(
                "token {t} outside vocabulary of {vocab_size}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_and_length_conventions() {
        let u = Utterance::from_content(&[5, 7]).unwrap();
        assert_eq!(u.tokens(), &[5, 7, EOS]);
        assert_eq!(u.content(), &[5, 7]);
        assert_eq!(u.len(), 3);
        assert_eq!(u.word_count(), 2);
        assert!(Utterance::from_content(&[BOS]).is_err());
        assert!(Utterance::from_tokens(vec![5]).is_err());
        assert!(Utterance::from_tokens(vec![EOS, EOS]).is_err());
    }
}
