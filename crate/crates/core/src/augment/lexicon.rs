//! Synonym lexicon and stopword list.
//!
//! Lexicon format: one entry per line, `word<TAB>syn1,syn2,...`. Blank lines
//! and lines starting with `#` are ignored. Lookups are case-insensitive.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use thiserror::Error;

const EMBEDDED_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");
const EMBEDDED_LEXICON: &str = include_str!("../../data/lexicon_small.tsv");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("lexicon line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymLexicon {
    entries: HashMap<String, Vec<String>>,
}

impl SynonymLexicon {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The small English lexicon shipped with the crate.
    pub fn embedded() -> Self {
        Self::parse(EMBEDDED_LEXICON).expect("embedded lexicon is well-formed")
    }

    pub fn from_entries<W, S>(entries: impl IntoIterator<Item = (W, Vec<S>)>) -> Self
    where
        W: Into<String>,
        S: Into<String>,
    {
        let mut lex = Self::default();
        for (word, syns) in entries {
            lex.insert(word.into(), syns.into_iter().map(Into::into).collect());
        }
        lex
    }

    fn insert(&mut self, word: String, synonyms: Vec<String>) {
        let key = word.to_lowercase();
        let slot = self.entries.entry(key.clone()).or_default();
        for s in synonyms {
            let s = s.trim().to_string();
            if s.is_empty() || s.chars().any(char::is_whitespace) || s.to_lowercase() == key || slot.contains(&s) {
                continue;
            }
            slot.push(s);
        }
        if slot.is_empty() {
            self.entries.remove(&key);
        }
    }

    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut lex = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (word, syns) = line.split_once('\t').ok_or_else(|| LexiconError::Parse {
                line: i + 1,
                reason: "expected word<TAB>synonyms".into(),
            })?;
            let word = word.trim();
            if word.is_empty() || word.chars().any(char::is_whitespace) {
                return Err(LexiconError::Parse {
                    line: i + 1,
                    reason: format!("invalid headword {word:?}"),
                });
            }
            lex.insert(word.to_string(), syns.split(',').map(str::to_string).collect());
        }
        Ok(lex)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Synonyms of `word`, never including the word itself.
    pub fn synonyms(&self, word: &str) -> Option<&[String]> {
        self.entries.get(&word.to_lowercase()).map(Vec::as_slice)
    }

    pub fn covers(&self, word: &str) -> bool {
        self.synonyms(word).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Serializes back to the TSV format, sorted by headword.
    pub fn to_tsv(&self) -> String {
        let mut keys: Vec<&String> = self.entries.keys().collect();
        keys.sort();
        let mut out = String::new();
        for k in keys {
            out.push_str(k);
            out.push('\t');
            out.push_str(&self.entries[k].join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    /// The embedded English list.
    pub fn english() -> Self {
        Self::parse(EMBEDDED_STOPWORDS)
    }

    pub fn none() -> Self {
        Self(HashSet::new())
    }

    /// One word per line; `#` comments.
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let path = path.as_ref();
        std::fs::read_to_string(path)
            .map(|t| Self::parse(&t))
            .map_err(|source| LexiconError::Io {
                path: path.display().to_string(),
                source,
            })
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for StopWords {
    fn default() -> Self {
        Self::english()
    }
}

/// Lexical resources used by the EDA-style augmenters.
#[derive(Debug, Clone, Default)]
pub struct Lexical {
    pub synonyms: SynonymLexicon,
    pub stopwords: StopWords,
}
