//! Keep only the augmented examples a vanilla model finds easiest.
//!
//! Selection is global over the whole augmented pool: the
//! `max(1, floor(keep_fraction * n))` lowest-loss items survive, ties going
//! to the earlier item, and survivors keep their input order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{encode, BackendError, SentenceEncoder};
use crate::classifier::{per_example_loss, LabelMap, MlpParams};
use crate::corpus::AugmentedExample;

/// Texts per encoder request when scoring.
pub const SCORE_CHUNK: usize = 64;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("keep fraction must be in (0, 1], got {0}")]
    InvalidKeepFraction(f64),
    #[error("item {index} has no loss; score it first")]
    MissingLoss { index: usize },
    #[error("item {index} has invalid loss {loss}")]
    InvalidLoss { index: usize, loss: f64 },
    #[error("label {0:?} is not known to the scoring model")]
    UnknownLabel(String),
    #[error("scoring model has {model} outputs but {labels} labels were given")]
    ClassCountMismatch { model: usize, labels: usize },
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub keep_fraction: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { keep_fraction: 1.0 }
    }
}

impl FilterConfig {
    pub fn new(keep_fraction: f64) -> Result<Self, FilterError> {
        let cfg = Self { keep_fraction };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        if self.keep_fraction > 0.0 && self.keep_fraction <= 1.0 {
            Ok(())
        } else {
            Err(FilterError::InvalidKeepFraction(self.keep_fraction))
        }
    }

    /// Number of items kept out of `n`.
    pub fn kept_count(&self, n: usize) -> usize {
        kept_count(self.keep_fraction, n)
    }
}

/// `max(1, floor(keep_fraction * n))`, or 0 for an empty pool. A tiny slack
/// absorbs products like `0.57 * 100 = 56.99999999999999`.
pub fn kept_count(keep_fraction: f64, n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    let m = (keep_fraction * n as f64 + 1e-9).floor() as usize;
    m.clamp(1, n)
}

/// Indices (ascending) of the items to keep given their losses.
pub fn select_lowest_loss(losses: &[f64], keep_fraction: f64) -> Vec<usize> {
    let m = kept_count(keep_fraction, losses.len());
    let mut order: Vec<usize> = (0..losses.len()).collect();
    // stable sort: equal losses stay in input order
    order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]));
    let mut kept = order[..m].to_vec();
    kept.sort_unstable();
    kept
}

/// Fills in each item's loss under the vanilla model.
pub fn score_augmented(
    vanilla: &MlpParams,
    encoder: &dyn SentenceEncoder,
    labels: &LabelMap,
    mut items: Vec<AugmentedExample>,
) -> Result<Vec<AugmentedExample>, FilterError> {
    if items.is_empty() {
        return Ok(items);
    }
    if labels.len() != vanilla.num_classes() {
        return Err(FilterError::ClassCountMismatch {
            model: vanilla.num_classes(),
            labels: labels.len(),
        });
    }
    let targets = items
        .iter()
        .map(|it| {
            labels
                .index(&it.label)
                .ok_or_else(|| FilterError::UnknownLabel(it.label.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let texts: Vec<&str> = items.iter().map(|it| it.text.as_str()).collect();
    let losses = texts
        .par_chunks(SCORE_CHUNK)
        .zip(targets.par_chunks(SCORE_CHUNK))
        .map(|(chunk, ys)| {
            let vectors = encode(encoder, chunk)?;
            let pairs: Vec<_> = vectors.into_iter().zip(ys.iter().copied()).collect();
            Ok(per_example_loss(vanilla, &pairs))
        })
        .collect::<Result<Vec<Vec<f64>>, BackendError>>()?;

    for (item, loss) in items.iter_mut().zip(losses.into_iter().flatten()) {
        item.loss = Some(loss);
    }
    Ok(items)
}

/// Keeps the lowest-loss fraction of a scored pool.
pub fn filter_lowest_loss(
    items: &[AugmentedExample],
    cfg: &FilterConfig,
) -> Result<Vec<AugmentedExample>, FilterError> {
    cfg.validate()?;
    let losses = items
        .iter()
        .enumerate()
        .map(|(index, it)| match it.loss {
            None => Err(FilterError::MissingLoss { index }),
            Some(loss) if !(loss.is_finite() && loss >= 0.0) => Err(FilterError::InvalidLoss { index, loss }),
            Some(loss) => Ok(loss),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(select_lowest_loss(&losses, cfg.keep_fraction)
        .into_iter()
        .map(|i| items[i].clone())
        .collect())
}
