//! Model backends: masked-LM predictor, sentence encoder, translator.
//!
//! Each capability is a trait so the engine never cares whether predictions
//! come from a deterministic mock or the HTTP model shim. The free functions
//! [`fill_mask`], [`encode`] and [`translate`] wrap the trait calls and
//! enforce the result contracts (sorted positive scores, echo fallback,
//! 384-dim finite vectors, lowercasing) so that every backend is held to the
//! same rules.

mod http;
mod mock;

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenize::TokenizedSentence;

pub use http::HttpBackend;
pub use mock::{
    BagOfWordsEncoder, DelayMlm, EchoMlm, FnMlm, RecordingMlm, SuffixTranslator, TableMlm, TableTranslator, VocabMlm,
};

/// Reserved token placed at the masked position. The shim maps it to the
/// model's native mask token.
pub const MASK_TOKEN: &str = "<mask>";

/// Dimension of sentence embeddings.
pub const EMBEDDING_DIM: usize = 384;

/// Environment variable that overrides the configured shim endpoint.
pub const SHIM_URL_ENV: &str = "AUGTEXT_SHIM_URL";

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend unavailable at {endpoint}: {reason}")]
    Unavailable { endpoint: String, reason: String },
    #[error("malformed backend response: {0}")]
    MalformedResponse(String),
    #[error("unsupported language pair {src}->{tgt}")]
    UnsupportedLanguagePair { src: String, tgt: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("invalid backend configuration: {0}")]
    Config(String),
}

/// One fill-mask candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskPrediction {
    pub token: String,
    pub score: f64,
}

impl MaskPrediction {
    pub fn new(token: impl Into<String>, score: f64) -> Self {
        Self {
            token: token.into(),
            score,
        }
    }
}

/// A single fill-mask query as seen by a predictor.
///
/// `tokens[mask_index]` holds [`MASK_TOKEN`]. `original` is the token that was
/// masked; remote models never receive it, but mocks may key on it.
#[derive(Debug, Clone, Copy)]
pub struct MaskQuery<'a> {
    pub tokens: &'a [String],
    pub mask_index: usize,
    pub original: &'a str,
    pub k: usize,
}

/// Identity of a model backend, reported in manifests and timing rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendInfo {
    pub kind: BackendKind,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_count: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
}

impl BackendInfo {
    pub fn mock(model: impl Into<String>) -> Self {
        Self {
            kind: BackendKind::Mock,
            model: model.into(),
            param_count: None,
            endpoint: None,
        }
    }
}

pub trait MaskPredictor: Send + Sync {
    /// Candidates for the masked position. May return fewer than `k`, more
    /// than `k`, unsorted, or none; [`fill_mask`] normalizes.
    fn predict(&self, query: &MaskQuery<'_>) -> Result<Vec<MaskPrediction>, BackendError>;

    fn info(&self) -> BackendInfo;
}

pub trait SentenceEncoder: Send + Sync {
    /// One vector per text. Inputs are already lowercased.
    fn encode_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError>;

    fn info(&self) -> BackendInfo;
}

pub trait Translator: Send + Sync {
    fn translate(&self, text: &str, src: &str, tgt: &str) -> Result<String, BackendError>;

    fn info(&self) -> BackendInfo;
}

impl<T: MaskPredictor + ?Sized> MaskPredictor for Arc<T> {
    fn predict(&self, query: &MaskQuery<'_>) -> Result<Vec<MaskPrediction>, BackendError> {
        (**self).predict(query)
    }

    fn info(&self) -> BackendInfo {
        (**self).info()
    }
}

impl<T: SentenceEncoder + ?Sized> SentenceEncoder for Arc<T> {
    fn encode_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        (**self).encode_batch(texts)
    }

    fn info(&self) -> BackendInfo {
        (**self).info()
    }
}

impl<T: Translator + ?Sized> Translator for Arc<T> {
    fn translate(&self, text: &str, src: &str, tgt: &str) -> Result<String, BackendError> {
        (**self).translate(text, src, tgt)
    }

    fn info(&self) -> BackendInfo {
        (**self).info()
    }
}

/// Queries `mlm` for position `mask_index` of `tokens` (which is masked
/// before the call).
///
/// The result is sorted by score, descending and stable, truncated to `k`,
/// and stripped of candidates with non-positive or non-finite scores or
/// invalid token text. If nothing survives, the original token is returned
/// with score 1.0, so the list is never empty.
pub fn fill_mask(
    mlm: &dyn MaskPredictor,
    tokens: &TokenizedSentence,
    mask_index: usize,
    k: usize,
) -> Result<Vec<MaskPrediction>, BackendError> {
    if mask_index >= tokens.len() {
        return Err(BackendError::InvalidRequest(format!(
            "mask_index {mask_index} out of range for {} tokens",
            tokens.len()
        )));
    }
    if k == 0 {
        return Err(BackendError::InvalidRequest("k must be at least 1".into()));
    }
    let original = tokens[mask_index].as_str();
    let mut masked = tokens.tokens().to_vec();
    masked[mask_index] = MASK_TOKEN.to_string();
    let query = MaskQuery {
        tokens: &masked,
        mask_index,
        original,
        k,
    };
    let mut preds: Vec<MaskPrediction> = mlm
        .predict(&query)?
        .into_iter()
        .filter(|p| {
            p.score.is_finite()
                && p.score > 0.0
                && !p.token.is_empty()
                && !p.token.chars().any(char::is_whitespace)
                && p.token != MASK_TOKEN
        })
        .collect();
    preds.sort_by(|a, b| b.score.total_cmp(&a.score));
    preds.truncate(k);
    if preds.is_empty() {
        preds.push(MaskPrediction::new(original, 1.0));
    }
    Ok(preds)
}

/// A 384-dimensional finite sentence embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, BackendError> {
        if values.len() != EMBEDDING_DIM {
            return Err(BackendError::MalformedResponse(format!(
                "embedding has dimension {}, expected {EMBEDDING_DIM}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(BackendError::MalformedResponse(format!(
                "embedding entry {i} is not finite"
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros() -> Self {
        Self(vec![0.0; EMBEDDING_DIM])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl TryFrom<Vec<f64>> for EmbeddingVector {
    type Error = BackendError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<EmbeddingVector> for Vec<f64> {
    fn from(v: EmbeddingVector) -> Self {
        v.0
    }
}

impl AsRef<[f64]> for EmbeddingVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Encodes texts after lowercasing them. Fails on an empty input list, a
/// count mismatch, or any invalid vector.
pub fn encode<S: AsRef<str>>(encoder: &dyn SentenceEncoder, texts: &[S]) -> Result<Vec<EmbeddingVector>, BackendError> {
    if texts.is_empty() {
        return Err(BackendError::InvalidRequest("encode needs at least one text".into()));
    }
    let lowered: Vec<String> = texts.iter().map(|t| t.as_ref().to_lowercase()).collect();
    let raw = encoder.encode_batch(&lowered)?;
    if raw.len() != lowered.len() {
        return Err(BackendError::MalformedResponse(format!(
            "{} vectors for {} texts",
            raw.len(),
            lowered.len()
        )));
    }
    raw.into_iter().map(EmbeddingVector::new).collect()
}

/// Encodes in fixed-size chunks to bound request sizes.
pub fn encode_chunked<S: AsRef<str>>(
    encoder: &dyn SentenceEncoder,
    texts: &[S],
    chunk: usize,
) -> Result<Vec<EmbeddingVector>, BackendError> {
    let mut out = Vec::with_capacity(texts.len());
    for part in texts.chunks(chunk.max(1)) {
        out.extend(encode(encoder, part)?);
    }
    Ok(out)
}

/// Translates `text` from `src` to `tgt`. Same-language requests are rejected.
pub fn translate(translator: &dyn Translator, text: &str, src: &str, tgt: &str) -> Result<String, BackendError> {
    if src == tgt {
        return Err(BackendError::InvalidRequest(format!(
            "source and target language are both {src:?}"
        )));
    }
    translator.translate(text, src, tgt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model_name: Option<String>,
    #[serde(with = "duration_secs")]
    pub timeout: Duration,
    /// Retries after the first attempt for transport failures and 5xx.
    pub retries: u32,
    /// Concurrent requests allowed against the endpoint; 1 means single-flight.
    pub max_inflight: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Mock,
            endpoint: None,
            model_name: None,
            timeout: Duration::from_secs(30),
            retries: 2,
            max_inflight: 4,
        }
    }
}

impl BackendConfig {
    pub fn http(endpoint: impl Into<String>) -> Self {
        Self {
            kind: BackendKind::Http,
            endpoint: Some(endpoint.into()),
            ..Self::default()
        }
    }

    /// Applies the environment override and checks that an HTTP config has
    /// an endpoint.
    pub fn resolved(mut self) -> Result<Self, BackendError> {
        if let Ok(url) = std::env::var(SHIM_URL_ENV) {
            if !url.trim().is_empty() {
                self.endpoint = Some(url.trim().to_string());
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.kind == BackendKind::Http && self.endpoint.as_deref().is_none_or(str::is_empty) {
            return Err(BackendError::Config(format!(
                "http backend needs an endpoint (set --shim-url or {SHIM_URL_ENV})"
            )));
        }
        if self.max_inflight == 0 {
            return Err(BackendError::Config("max_inflight must be at least 1".into()));
        }
        Ok(())
    }
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

/// The set of model backends available to a run. Any of them may be absent;
/// methods that need a missing backend fail up front.
#[derive(Clone, Default)]
pub struct Backends {
    pub mlm: Option<Arc<dyn MaskPredictor>>,
    pub encoder: Option<Arc<dyn SentenceEncoder>>,
    pub translator: Option<Arc<dyn Translator>>,
}

impl Backends {
    /// Hermetic backends: vocabulary-hash MLM, bag-of-words encoder,
    /// invertible suffix translator.
    pub fn mock(vocabulary: Vec<String>) -> Self {
        Self {
            mlm: Some(Arc::new(VocabMlm::new(vocabulary))),
            encoder: Some(Arc::new(BagOfWordsEncoder)),
            translator: Some(Arc::new(SuffixTranslator::default())),
        }
    }

    /// All three capabilities served by one shim.
    pub fn http(config: &BackendConfig) -> Result<Self, BackendError> {
        let client = Arc::new(HttpBackend::new(config)?);
        Ok(Self {
            mlm: Some(client.clone()),
            encoder: Some(client.clone()),
            translator: Some(client),
        })
    }

    pub fn info(&self) -> Vec<BackendInfo> {
        let mut out = Vec::new();
        if let Some(m) = &self.mlm {
            out.push(m.info());
        }
        if let Some(e) = &self.encoder {
            out.push(e.info());
        }
        if let Some(t) = &self.translator {
            out.push(t.info());
        }
        out
    }
}

impl std::fmt::Debug for Backends {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Backends")
            .field("mlm", &self.mlm.as_ref().map(|m| m.info()))
            .field("encoder", &self.encoder.as_ref().map(|e| e.info()))
            .field("translator", &self.translator.as_ref().map(|t| t.info()))
            .finish()
    }
}
