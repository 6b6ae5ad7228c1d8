//! Augmentation methods and dataset-level augmentation.
//!
//! | tag   | method                                                        |
//! |-------|---------------------------------------------------------------|
//! | `imf` | iterative mask fill: every word re-predicted left to right     |
//! | `br`  | masked-LM replacement of a few words, no context propagation   |
//! | `ri`  | random insertion of synonyms                                  |
//! | `rs`  | random swap                                                   |
//! | `rd`  | random deletion                                               |
//! | `sr`  | synonym replacement                                           |
//! | `bt`  | back translation through a pivot language                     |
//!
//! Randomness comes from an [`RngStream`] keyed by (global seed, example id,
//! replica, method), so results do not depend on thread scheduling.

mod lexicon;
mod ops;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{BackendError, Backends, MaskPredictor, Translator};
use crate::corpus::{AugmentedExample, Dataset, Method};
use crate::tokenize::{word_tokenize, TokenizedSentence};

pub use crate::rng::{RngStream, StreamKey};
pub use lexicon::{Lexical, LexiconError, StopWords, SynonymLexicon};
pub use ops::{
    back_translate, bert_replacement, edit_count, imf_augment, imf_tokens, random_deletion, random_insertion,
    random_swap, select_word, synonym_replacement, EditOutcome,
};

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("cannot augment empty text")]
    EmptyInput,
    #[error("{method}: backend failure{}: {source}", position.map(|p| format!(" at position {p}")).unwrap_or_default())]
    Backend {
        method: Method,
        position: Option<usize>,
        #[source]
        source: BackendError,
    },
    #[error("method {method} needs a {backend} backend")]
    MissingBackend { method: Method, backend: &'static str },
    #[error("invalid augmentation parameters: {0}")]
    InvalidParams(String),
    #[error("{0} is not an augmentation method")]
    UnsupportedMethod(Method),
    #[error("{failed} of {total} examples failed to augment (limit 1%); first failure: {first}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: String,
        /// Whether any of the failures came from a model backend.
        backend: bool,
    },
}

impl AugmentError {
    /// The underlying backend error, if any.
    pub fn backend_error(&self) -> Option<&BackendError> {
        match self {
            AugmentError::Backend { source, .. } => Some(source),
            _ => None,
        }
    }

    /// True for failures caused by a missing or failing model backend.
    pub fn is_backend(&self) -> bool {
        matches!(
            self,
            AugmentError::Backend { .. }
                | AugmentError::MissingBackend { .. }
                | AugmentError::TooManyFailures { backend: true, .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentParams {
    /// Top-k candidates requested from the masked LM.
    pub k: usize,
    /// Fraction of words changed by the baseline augmenters.
    pub alpha: f64,
    /// Augmented copies per source example.
    pub n_aug: usize,
    pub source_lang: String,
    pub pivot_lang: String,
    pub global_seed: u64,
}

impl Default for AugmentParams {
    fn default() -> Self {
        Self {
            k: 5,
            alpha: 0.1,
            n_aug: 1,
            source_lang: "en".into(),
            pivot_lang: "tr".into(),
            global_seed: 0,
        }
    }
}

impl AugmentParams {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if self.k == 0 {
            return Err(AugmentError::InvalidParams("k must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(AugmentError::InvalidParams(format!(
                "alpha must be in [0, 1], got {}",
                self.alpha
            )));
        }
        if self.n_aug == 0 {
            return Err(AugmentError::InvalidParams("n_aug must be at least 1".into()));
        }
        if self.source_lang == self.pivot_lang {
            return Err(AugmentError::InvalidParams(
                "pivot language must differ from the source language".into(),
            ));
        }
        Ok(())
    }
}

/// Binds parameters, model backends and lexical resources.
pub struct Augmenter<'a> {
    pub params: &'a AugmentParams,
    pub backends: &'a Backends,
    pub lexical: &'a Lexical,
}

/// Result of augmenting one text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedText {
    pub text: String,
    /// Edits skipped for lack of eligible words (ri, sr).
    pub skipped: usize,
}

impl<'a> Augmenter<'a> {
    pub fn new(params: &'a AugmentParams, backends: &'a Backends, lexical: &'a Lexical) -> Self {
        Self {
            params,
            backends,
            lexical,
        }
    }

    fn mlm(&self, method: Method) -> Result<&dyn MaskPredictor, AugmentError> {
        self.backends.mlm.as_deref().ok_or(AugmentError::MissingBackend {
            method,
            backend: "masked-LM",
        })
    }

    fn translator(&self, method: Method) -> Result<&dyn Translator, AugmentError> {
        self.backends.translator.as_deref().ok_or(AugmentError::MissingBackend {
            method,
            backend: "translator",
        })
    }

    /// Checks that `method` is an augmenter and its backends are present.
    pub fn check(&self, method: Method) -> Result<(), AugmentError> {
        self.params.validate()?;
        match method {
            Method::Real => Err(AugmentError::UnsupportedMethod(method)),
            m if m.needs_mlm() => self.mlm(m).map(|_| ()),
            m if m.needs_translator() => self.translator(m).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// Augments one text with the given stream.
    pub fn augment_text(&self, method: Method, text: &str, rng: &mut RngStream) -> Result<AugmentedText, AugmentError> {
        let p = self.params;
        let tokens = word_tokenize(text);
        if tokens.is_empty() {
            return Err(AugmentError::EmptyInput);
        }
        let plain = |t: TokenizedSentence| AugmentedText {
            text: t.to_string(),
            skipped: 0,
        };
        let edited = |o: EditOutcome| AugmentedText {
            text: ops::detokenize(&o.tokens),
            skipped: o.skipped,
        };
        Ok(match method {
            Method::Imf => plain(imf_tokens(&tokens, self.mlm(method)?, p.k, rng)?),
            Method::Br => plain(bert_replacement(&tokens, p.alpha, self.mlm(method)?, p.k, rng)?),
            Method::Ri => edited(random_insertion(
                tokens.tokens(),
                p.alpha,
                &self.lexical.synonyms,
                &self.lexical.stopwords,
                rng,
            )),
            Method::Sr => edited(synonym_replacement(
                tokens.tokens(),
                p.alpha,
                &self.lexical.synonyms,
                &self.lexical.stopwords,
                rng,
            )),
            Method::Rs => edited(EditOutcome {
                tokens: random_swap(tokens.tokens(), p.alpha, rng),
                skipped: 0,
            }),
            Method::Rd => edited(EditOutcome {
                tokens: random_deletion(tokens.tokens(), p.alpha, rng),
                skipped: 0,
            }),
            Method::Bt => AugmentedText {
                text: back_translate(text, self.translator(method)?, &p.source_lang, &p.pivot_lang)?,
                skipped: 0,
            },
            Method::Real => return Err(AugmentError::UnsupportedMethod(method)),
        })
    }

    /// Augments every example `n_aug` times.
    ///
    /// Output is example-major, replica-minor. Examples whose augmentation
    /// fails are dropped and reported; if more than 1% fail the whole call
    /// fails.
    pub fn augment_dataset(&self, d: &Dataset, method: Method) -> Result<AugmentReport, AugmentError> {
        self.check(method)?;
        let n_aug = self.params.n_aug;
        if method == Method::Bt && n_aug > 1 {
            log::warn!(
                "bt: a deterministic translator yields {} identical copies per example",
                n_aug
            );
        }
        let per_example: Vec<Result<Vec<(AugmentedText, u32)>, AugmentError>> = d
            .examples()
            .par_iter()
            .map(|ex| {
                let stream = |replica: u32| {
                    RngStream::new(StreamKey {
                        global_seed: self.params.global_seed,
                        example_id: ex.id,
                        replica,
                        method,
                    })
                };
                if method == Method::Bt {
                    let once = self.augment_text(method, &ex.text, &mut stream(0))?;
                    return Ok((0..n_aug as u32).map(|r| (once.clone(), r)).collect());
                }
                (0..n_aug as u32)
                    .map(|r| Ok((self.augment_text(method, &ex.text, &mut stream(r))?, r)))
                    .collect()
            })
            .collect();

        let mut report = AugmentReport::default();
        for (ex, result) in d.examples().iter().zip(per_example) {
            match result {
                Ok(texts) => {
                    for (aug, replica) in texts {
                        report.skipped_edits += aug.skipped;
                        report.items.push(AugmentedExample {
                            orig_id: ex.id,
                            method,
                            text: aug.text,
                            label: ex.label.clone(),
                            loss: None,
                        });
                        report.replicas.push(replica);
                    }
                }
                Err(e) => report.failures.push(ExampleFailure {
                    id: ex.id,
                    error: e.to_string(),
                    backend: e.is_backend(),
                }),
            }
        }
        if report.skipped_edits > 0 {
            log::warn!(
                "{method}: {} edits skipped for lack of eligible words",
                report.skipped_edits
            );
        }
        let failed = report.failures.len();
        if failed * 100 > d.len() {
            return Err(AugmentError::TooManyFailures {
                failed,
                total: d.len(),
                first: report.failures[0].error.clone(),
                backend: report.failures.iter().any(|f| f.backend),
            });
        }
        for f in &report.failures {
            log::warn!("{method}: example {} skipped: {}", f.id, f.error);
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExampleFailure {
    pub id: u64,
    pub error: String,
    pub backend: bool,
}

#[derive(Debug, Clone, Default)]
pub struct AugmentReport {
    pub items: Vec<AugmentedExample>,
    /// Replica index of each item, parallel to `items`.
    pub replicas: Vec<u32>,
    pub failures: Vec<ExampleFailure>,
    pub skipped_edits: usize,
}

impl AugmentReport {
    /// Items whose replica index is below `n`, i.e. what an `n_aug = n` run
    /// with the same seed would have produced.
    pub fn first_replicas(&self, n: usize) -> Vec<AugmentedExample> {
        self.items
            .iter()
            .zip(&self.replicas)
            .filter(|(_, &r)| (r as usize) < n)
            .map(|(item, _)| item.clone())
            .collect()
    }
}

/// Convenience wrapper around [`Augmenter::augment_dataset`].
pub fn augment_dataset(
    d: &Dataset,
    method: Method,
    params: &AugmentParams,
    backends: &Backends,
    lexical: &Lexical,
) -> Result<AugmentReport, AugmentError> {
    Augmenter::new(params, backends, lexical).augment_dataset(d, method)
}

#[cfg(test)]
mod tests;
