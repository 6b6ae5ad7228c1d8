//! Deterministic in-process backends for hermetic runs and tests.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Duration;

use super::{
    BackendError, BackendInfo, MaskPrediction, MaskPredictor, MaskQuery, SentenceEncoder, Translator, EMBEDDING_DIM,
};
use crate::rng::fnv1a;
use crate::tokenize::{join, word_tokenize};

/// Always proposes the masked token itself with score 1.0.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoMlm;

impl MaskPredictor for EchoMlm {
    fn predict(&self, query: &MaskQuery<'_>) -> Result<Vec<MaskPrediction>, BackendError> {
        Ok(vec![MaskPrediction::new(query.original, 1.0)])
    }

    fn info(&self) -> BackendInfo {
        BackendInfo::mock("echo")
    }
}

/// Candidates looked up by the masked token. Unknown tokens get no
/// candidates (and therefore echo).
#[derive(Debug, Clone, Default)]
pub struct TableMlm {
    table: HashMap<String, Vec<MaskPrediction>>,
}

impl TableMlm {
    pub fn new<K: Into<String>>(entries: impl IntoIterator<Item = (K, Vec<MaskPrediction>)>) -> Self {
        Self {
            table: entries.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }
}

impl MaskPredictor for TableMlm {
    fn predict(&self, query: &MaskQuery<'_>) -> Result<Vec<MaskPrediction>, BackendError> {
        Ok(self.table.get(query.original).cloned().unwrap_or_default())
    }

    fn info(&self) -> BackendInfo {
        BackendInfo::mock("table")
    }
}

/// Predictor backed by a closure; handy for context-sensitive test doubles.
pub struct FnMlm<F> {
    f: F,
}

impl<F> FnMlm<F>
where
    F: Fn(&MaskQuery<'_>) -> Vec<MaskPrediction> + Send + Sync,
{
    pub fn new(f: F) -> Self {
        Self { f }
    }
}

impl<F> MaskPredictor for FnMlm<F>
where
    F: Fn(&MaskQuery<'_>) -> Vec<MaskPrediction> + Send + Sync,
{
    fn predict(&self, query: &MaskQuery<'_>) -> Result<Vec<MaskPrediction>, BackendError> {
        Ok((self.f)(query))
    }

    fn info(&self) -> BackendInfo {
        BackendInfo::mock("fn")
    }
}

/// A query captured by [`RecordingMlm`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordedCall {
    pub tokens: Vec<String>,
    pub mask_index: usize,
    pub k: usize,
    pub candidates: Vec<String>,
}

/// Wraps a predictor and records every query and its raw answer.
pub struct RecordingMlm<M> {
    inner: M,
    calls: Mutex<Vec<RecordedCall>>,
}

impl<M: MaskPredictor> RecordingMlm<M> {
    pub fn new(inner: M) -> Self {
        Self {
            inner,
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> Vec<RecordedCall> {
        self.calls.lock().expect("recording lock poisoned").clone()
    }

    pub fn clear(&self) {
        self.calls.lock().expect("recording lock poisoned").clear();
    }
}

impl<M: MaskPredictor> MaskPredictor for RecordingMlm<M> {
    fn predict(&self, query: &MaskQuery<'_>) -> Result<Vec<MaskPrediction>, BackendError> {
        let preds = self.inner.predict(query)?;
        self.calls.lock().expect("recording lock poisoned").push(RecordedCall {
            tokens: query.tokens.to_vec(),
            mask_index: query.mask_index,
            k: query.k,
            candidates: preds.iter().map(|p| p.token.clone()).collect(),
        });
        Ok(preds)
    }

    fn info(&self) -> BackendInfo {
        self.inner.info()
    }
}

/// Adds a fixed latency to every prediction. Used to model slower and faster
/// masked LMs in timing studies.
pub struct DelayMlm<M> {
    inner: M,
    delay: Duration,
    name: String,
}

impl<M: MaskPredictor> DelayMlm<M> {
    pub fn new(inner: M, delay: Duration, name: impl Into<String>) -> Self {
        Self {
            inner,
            delay,
            name: name.into(),
        }
    }
}

impl<M: MaskPredictor> MaskPredictor for DelayMlm<M> {
    fn predict(&self, query: &MaskQuery<'_>) -> Result<Vec<MaskPrediction>, BackendError> {
        std::thread::sleep(self.delay);
        self.inner.predict(query)
    }

    fn info(&self) -> BackendInfo {
        BackendInfo::mock(self.name.clone())
    }
}

/// Context-hashing predictor over a fixed vocabulary.
///
/// Candidates are the masked word itself (score 2.0) plus up to `k - 1`
/// vocabulary words (scores 1, 1/2, 1/3, ...) chosen by hashing the
/// neighbouring tokens. When the vocabulary holds other words sharing the
/// masked word's three-character prefix, candidates are restricted to that
/// family, which mimics a real model's preference for plausible substitutes.
#[derive(Debug, Clone)]
pub struct VocabMlm {
    vocabulary: Vec<String>,
    families: HashMap<String, Vec<usize>>,
}

const FAMILY_PREFIX: usize = 3;

fn family_key(word: &str) -> String {
    word.chars().take(FAMILY_PREFIX).flat_map(char::to_lowercase).collect()
}

impl VocabMlm {
    pub fn new(vocabulary: Vec<String>) -> Self {
        let mut vocabulary: Vec<String> = vocabulary
            .into_iter()
            .filter(|w| !w.is_empty() && !w.chars().any(char::is_whitespace))
            .collect();
        vocabulary.sort();
        vocabulary.dedup();
        let mut families: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, w) in vocabulary.iter().enumerate() {
            families.entry(family_key(w)).or_default().push(i);
        }
        Self { vocabulary, families }
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }
}

impl MaskPredictor for VocabMlm {
    fn predict(&self, query: &MaskQuery<'_>) -> Result<Vec<MaskPrediction>, BackendError> {
        let mut out = vec![MaskPrediction::new(query.original, 2.0)];
        if self.vocabulary.is_empty() {
            return Ok(out);
        }
        let pool: Vec<usize> = match self.families.get(&family_key(query.original)) {
            Some(f) if f.iter().any(|&i| self.vocabulary[i] != query.original) => f.clone(),
            _ => (0..self.vocabulary.len()).collect(),
        };
        let left = query
            .mask_index
            .checked_sub(1)
            .map_or("<s>", |i| query.tokens[i].as_str());
        let right = query.tokens.get(query.mask_index + 1).map_or("</s>", String::as_str);
        let context = fnv1a(format!("{left}\u{1f}{right}").as_bytes());
        let mut rank = 1u64;
        let mut attempts = 0u64;
        while out.len() < query.k && attempts < 4 * query.k as u64 {
            let h = fnv1a(&(context ^ attempts.wrapping_mul(0x9E37_79B9)).to_le_bytes());
            attempts += 1;
            let word = &self.vocabulary[pool[(h % pool.len() as u64) as usize]];
            if out.iter().any(|p| &p.token == word) {
                continue;
            }
            out.push(MaskPrediction::new(word.clone(), 1.0 / rank as f64));
            rank += 1;
        }
        Ok(out)
    }

    fn info(&self) -> BackendInfo {
        BackendInfo::mock(format!("vocab-hash({} words)", self.vocabulary.len()))
    }
}

/// Hashed bag-of-words encoder.
///
/// Each token lands in one of 384 buckets with a ±1 sign from a second hash;
/// the sum is L2-normalized. Word order is invisible to it by construction.
#[derive(Debug, Clone, Copy, Default)]
pub struct BagOfWordsEncoder;

impl BagOfWordsEncoder {
    pub fn embed(text: &str) -> Vec<f64> {
        let mut v = vec![0.0; EMBEDDING_DIM];
        for token in word_tokenize(text).iter() {
            let bucket = (fnv1a(token.as_bytes()) % EMBEDDING_DIM as u64) as usize;
            let mut salted = Vec::with_capacity(token.len() + 1);
            salted.push(0xA5);
            salted.extend_from_slice(token.as_bytes());
            let sign = if fnv1a(&salted) & 1 == 0 { 1.0 } else { -1.0 };
            v[bucket] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

impl SentenceEncoder for BagOfWordsEncoder {
    fn encode_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        Ok(texts.iter().map(|t| Self::embed(t)).collect())
    }

    fn info(&self) -> BackendInfo {
        BackendInfo::mock("bag-of-words")
    }
}

/// Invertible word-level translator: `w` becomes `w_<tgt>`, and a
/// `_<src>` suffix is stripped first. Translating into the base language adds
/// no suffix, so a round trip through any pivot is the identity. Tokens
/// without alphanumeric characters pass through untouched.
#[derive(Debug, Clone)]
pub struct SuffixTranslator {
    base: String,
}

impl SuffixTranslator {
    pub fn new(base: impl Into<String>) -> Self {
        Self { base: base.into() }
    }
}

impl Default for SuffixTranslator {
    fn default() -> Self {
        Self::new("en")
    }
}

impl Translator for SuffixTranslator {
    fn translate(&self, text: &str, src: &str, tgt: &str) -> Result<String, BackendError> {
        let strip = format!("_{src}");
        let tokens: Vec<String> = word_tokenize(text)
            .iter()
            .map(|t| {
                if !t.chars().any(char::is_alphanumeric) {
                    return t.clone();
                }
                let stem = t.strip_suffix(&strip).filter(|s| !s.is_empty()).unwrap_or(t);
                if tgt == self.base {
                    stem.to_string()
                } else {
                    format!("{stem}_{tgt}")
                }
            })
            .collect();
        Ok(join(&tokens))
    }

    fn info(&self) -> BackendInfo {
        BackendInfo::mock("suffix-translator")
    }
}

/// Whole-text lookup per language pair. Unknown texts pass through;
/// unknown pairs are an error.
#[derive(Debug, Clone, Default)]
pub struct TableTranslator {
    pairs: HashMap<(String, String), HashMap<String, String>>,
}

impl TableTranslator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, src: &str, tgt: &str, from: &str, to: &str) -> Self {
        self.pairs
            .entry((src.to_string(), tgt.to_string()))
            .or_default()
            .insert(from.to_string(), to.to_string());
        self
    }
}

impl Translator for TableTranslator {
    fn translate(&self, text: &str, src: &str, tgt: &str) -> Result<String, BackendError> {
        let table = self.pairs.get(&(src.to_string(), tgt.to_string())).ok_or_else(|| {
            BackendError::UnsupportedLanguagePair {
                src: src.to_string(),
                tgt: tgt.to_string(),
            }
        })?;
        Ok(table.get(text).cloned().unwrap_or_else(|| text.to_string()))
    }

    fn info(&self) -> BackendInfo {
        BackendInfo::mock("table-translator")
    }
}
