//! The sentence-level augmentation operators.

use rand::seq::index;
use rand::Rng;

use super::lexicon::{StopWords, SynonymLexicon};
use super::AugmentError;
use crate::backends::{fill_mask, translate, MaskPrediction, MaskPredictor, Translator};
use crate::corpus::Method;
use crate::tokenize::{join, word_tokenize, TokenizedSentence};

/// Number of edits for the count-based augmenters: zero when `alpha` is zero,
/// otherwise `round(alpha * len)` but at least one.
pub fn edit_count(alpha: f64, len: usize) -> usize {
    if alpha <= 0.0 || len == 0 {
        0
    } else {
        ((alpha * len as f64).round() as usize).max(1)
    }
}

/// Token sequence after an edit, plus the number of edits that had to be
/// skipped for lack of eligible words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditOutcome {
    pub tokens: Vec<String>,
    pub skipped: usize,
}

impl EditOutcome {
    fn clean(tokens: Vec<String>) -> Self {
        Self { tokens, skipped: 0 }
    }
}

/// Samples a candidate with probability proportional to its score.
///
/// # Panics
///
/// If `preds` is empty.
pub fn select_word<'a, R: Rng + ?Sized>(preds: &'a [MaskPrediction], rng: &mut R) -> &'a str {
    let last = preds.last().expect("select_word needs at least one candidate");
    let total: f64 = preds.iter().map(|p| p.score).sum();
    let mut u = rng.random::<f64>() * total;
    for p in preds {
        if u < p.score {
            return &p.token;
        }
        u -= p.score;
    }
    &last.token
}

/// Iterative mask fill over an already tokenized sentence.
///
/// Positions are visited left to right. Each is masked, the model is queried
/// against the current sequence (which already holds every earlier
/// replacement), and the sampled candidate is written back before moving on.
pub fn imf_tokens<R: Rng + ?Sized>(
    tokens: &TokenizedSentence,
    mlm: &dyn MaskPredictor,
    k: usize,
    rng: &mut R,
) -> Result<TokenizedSentence, AugmentError> {
    let mut current = tokens.clone();
    for i in 0..current.len() {
        let preds = fill_mask(mlm, &current, i, k).map_err(|source| AugmentError::Backend {
            method: Method::Imf,
            position: Some(i),
            source,
        })?;
        let word = select_word(&preds, rng).to_string();
        current[i] = word;
    }
    Ok(current)
}

/// Iterative mask fill on raw text: tokenize, [`imf_tokens`], join.
pub fn imf_augment<R: Rng + ?Sized>(
    sentence: &str,
    mlm: &dyn MaskPredictor,
    k: usize,
    rng: &mut R,
) -> Result<String, AugmentError> {
    let tokens = word_tokenize(sentence);
    if tokens.is_empty() {
        return Err(AugmentError::EmptyInput);
    }
    Ok(imf_tokens(&tokens, mlm, k, rng)?.to_string())
}

/// Non-iterative masked-LM replacement.
///
/// `edit_count(alpha, len)` distinct positions are chosen; each one is masked
/// in the *original* sequence, so no query sees another replacement.
pub fn bert_replacement<R: Rng + ?Sized>(
    tokens: &TokenizedSentence,
    alpha: f64,
    mlm: &dyn MaskPredictor,
    k: usize,
    rng: &mut R,
) -> Result<TokenizedSentence, AugmentError> {
    let n = edit_count(alpha, tokens.len()).min(tokens.len());
    let mut positions = index::sample(rng, tokens.len(), n).into_vec();
    positions.sort_unstable();
    let mut out = tokens.clone();
    for i in positions {
        let preds = fill_mask(mlm, tokens, i, k).map_err(|source| AugmentError::Backend {
            method: Method::Br,
            position: Some(i),
            source,
        })?;
        out[i] = select_word(&preds, rng).to_string();
    }
    Ok(out)
}

/// Inserts synonyms of randomly chosen words at random positions.
///
/// Each insertion draws up to 10 words from the current sentence looking for
/// a non-stopword the lexicon covers; if none is found that insertion is
/// skipped.
pub fn random_insertion<R: Rng + ?Sized>(
    tokens: &[String],
    alpha: f64,
    lexicon: &SynonymLexicon,
    stopwords: &StopWords,
    rng: &mut R,
) -> EditOutcome {
    const MAX_DRAWS: usize = 10;
    let n = edit_count(alpha, tokens.len());
    let mut out = tokens.to_vec();
    let mut skipped = 0;
    for _ in 0..n {
        let mut synonym = None;
        for _ in 0..MAX_DRAWS {
            let word = &out[rng.random_range(0..out.len())];
            if stopwords.contains(word) {
                continue;
            }
            if let Some(syns) = lexicon.synonyms(word) {
                synonym = Some(syns[rng.random_range(0..syns.len())].clone());
                break;
            }
        }
        match synonym {
            Some(s) => {
                let at = rng.random_range(0..=out.len());
                out.insert(at, s);
            }
            None => skipped += 1,
        }
    }
    EditOutcome { tokens: out, skipped }
}

/// Swaps two distinct random positions, `edit_count(alpha, len)` times.
pub fn random_swap<R: Rng + ?Sized>(tokens: &[String], alpha: f64, rng: &mut R) -> Vec<String> {
    let mut out = tokens.to_vec();
    let len = out.len();
    if len < 2 {
        return out;
    }
    for _ in 0..edit_count(alpha, len) {
        let i = rng.random_range(0..len);
        let mut j = rng.random_range(0..len - 1);
        if j >= i {
            j += 1;
        }
        out.swap(i, j);
    }
    out
}

/// Deletes each token independently with probability `alpha`. If every token
/// would go, one uniformly chosen token survives.
pub fn random_deletion<R: Rng + ?Sized>(tokens: &[String], alpha: f64, rng: &mut R) -> Vec<String> {
    if alpha <= 0.0 || tokens.is_empty() {
        return tokens.to_vec();
    }
    let kept: Vec<String> = tokens
        .iter()
        .filter(|_| rng.random::<f64>() >= alpha)
        .cloned()
        .collect();
    if kept.is_empty() {
        vec![tokens[rng.random_range(0..tokens.len())].clone()]
    } else {
        kept
    }
}

/// Replaces `edit_count(alpha, len)` distinct eligible positions with a
/// uniformly chosen synonym. Eligible means not a stopword and covered by the
/// lexicon. With fewer eligible positions than requested, all are replaced;
/// with none, the input is returned and `skipped` is 1.
pub fn synonym_replacement<R: Rng + ?Sized>(
    tokens: &[String],
    alpha: f64,
    lexicon: &SynonymLexicon,
    stopwords: &StopWords,
    rng: &mut R,
) -> EditOutcome {
    let n = edit_count(alpha, tokens.len());
    if n == 0 {
        return EditOutcome::clean(tokens.to_vec());
    }
    let eligible: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| !stopwords.contains(t) && lexicon.covers(t))
        .map(|(i, _)| i)
        .collect();
    if eligible.is_empty() {
        return EditOutcome {
            tokens: tokens.to_vec(),
            skipped: 1,
        };
    }
    let mut chosen: Vec<usize> = index::sample(rng, eligible.len(), n.min(eligible.len()))
        .into_iter()
        .map(|j| eligible[j])
        .collect();
    chosen.sort_unstable();
    let mut out = tokens.to_vec();
    for i in chosen {
        let syns = lexicon.synonyms(&tokens[i]).expect("eligible positions are covered");
        out[i] = syns[rng.random_range(0..syns.len())].clone();
    }
    EditOutcome::clean(out)
}

/// Translates to `pivot` and back to `source`.
pub fn back_translate(
    text: &str,
    translator: &dyn Translator,
    source: &str,
    pivot: &str,
) -> Result<String, AugmentError> {
    if text.trim().is_empty() {
        return Err(AugmentError::EmptyInput);
    }
    let wrap = |source| AugmentError::Backend {
        method: Method::Bt,
        position: None,
        source,
    };
    let there = translate(translator, text, source, pivot).map_err(wrap)?;
    translate(translator, &there, pivot, source).map_err(wrap)
}

/// Joins a token vector, for operators that work on plain `Vec<String>`.
pub(crate) fn detokenize(tokens: &[String]) -> String {
    join(tokens)
}
