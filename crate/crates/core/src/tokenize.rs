//! Word-level tokenization and detokenization.
//!
//! Text is split on Unicode whitespace. Punctuation from a small fixed set is
//! peeled off the edges of each chunk into single-character tokens, while
//! apostrophes and hyphens inside a word stay attached (`don't`, `well-known`).
//! Casing is preserved.

use std::fmt;
use std::ops::{Index, IndexMut};

use thiserror::Error;

/// Characters detached from the edges of a whitespace chunk.
const DETACHED: &[char] = &['.', ',', '!', '?', ';', ':', '"', '(', ')', '[', ']'];

/// No space is emitted before these.
const CLOSING: &[&str] = &[".", ",", "!", "?", ";", ":", ")", "]"];

/// No space is emitted after these.
const OPENING: &[&str] = &["(", "["];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("token {index} is empty")]
    Empty { index: usize },
    #[error("token {index} ({token:?}) contains whitespace")]
    Whitespace { index: usize, token: String },
}

/// An ordered list of non-empty tokens with no internal whitespace.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenizedSentence(Vec<String>);

impl TokenizedSentence {
    pub fn new(tokens: Vec<String>) -> Result<Self, TokenError> {
        for (index, token) in tokens.iter().enumerate() {
            if token.is_empty() {
                return Err(TokenError::Empty { index });
            }
            if token.chars().any(char::is_whitespace) {
                return Err(TokenError::Whitespace {
                    index,
                    token: token.clone(),
                });
            }
        }
        Ok(Self(tokens))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }

    /// Replaces the token at `index`. The replacement must itself be a valid
    /// token.
    pub fn set(&mut self, index: usize, token: String) -> Result<(), TokenError> {
        if token.is_empty() {
            return Err(TokenError::Empty { index });
        }
        if token.chars().any(char::is_whitespace) {
            return Err(TokenError::Whitespace { index, token });
        }
        self.0[index] = token;
        Ok(())
    }
}

impl Index<usize> for TokenizedSentence {
    type Output = String;

    fn index(&self, index: usize) -> &String {
        &self.0[index]
    }
}

impl IndexMut<usize> for TokenizedSentence {
    fn index_mut(&mut self, index: usize) -> &mut String {
        &mut self.0[index]
    }
}

impl fmt::Display for TokenizedSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&join(self.tokens()))
    }
}

impl<'a> IntoIterator for &'a TokenizedSentence {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Splits `text` into word and punctuation tokens.
pub fn word_tokenize(text: &str) -> TokenizedSentence {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let start = chunk
            .char_indices()
            .find(|(_, c)| !DETACHED.contains(c))
            .map(|(i, _)| i);
        let Some(start) = start else {
            // punctuation only
            tokens.extend(chunk.chars().map(String::from));
            continue;
        };
        let end = chunk
            .char_indices()
            .rev()
            .find(|(_, c)| !DETACHED.contains(c))
            .map(|(i, c)| i + c.len_utf8())
            .unwrap_or(chunk.len());
        tokens.extend(chunk[..start].chars().map(String::from));
        tokens.push(chunk[start..end].to_string());
        tokens.extend(chunk[end..].chars().map(String::from));
    }
    TokenizedSentence(tokens)
}

/// Joins tokens with single spaces, attaching punctuation to its neighbour.
///
/// Double quotes alternate: an odd occurrence opens (attaches to the next
/// token), an even occurrence closes (attaches to the previous one).
pub fn join<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    let mut quotes_open = false;
    let mut glue_next = true;
    for token in tokens {
        let token = token.as_ref();
        let (no_space_before, no_space_after) = if token == "\"" {
            quotes_open = !quotes_open;
            if quotes_open {
                (false, true)
            } else {
                (true, false)
            }
        } else {
            (CLOSING.contains(&token), OPENING.contains(&token))
        };
        if !glue_next && !no_space_before {
            out.push(' ');
        }
        out.push_str(token);
        glue_next = no_space_after;
    }
    out
}
