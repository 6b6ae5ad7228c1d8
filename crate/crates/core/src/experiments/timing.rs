use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::augment::{AugmentParams, Augmenter, Lexical, RngStream, StreamKey};
use crate::backends::{BackendInfo, Backends};
use crate::corpus::Method;

/// Sentence count for the model-size timing comparison.
pub const TIMING_SAMPLE: usize = 100;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingResult {
    pub method: Method,
    pub n_sentences: usize,
    pub seconds: f64,
    /// Identity of the model backend the method used, if any.
    pub backend: Option<BackendInfo>,
}

/// Wall-clock time to augment `sentences` one after another on a single
/// random stream. The first failure aborts the measurement.
pub fn time_batch<S: AsRef<str>>(
    method: Method,
    sentences: &[S],
    params: &AugmentParams,
    backends: &Backends,
    lexical: &Lexical,
) -> Result<TimingResult, ExperimentError> {
    let augmenter = Augmenter::new(params, backends, lexical);
    augmenter.check(method)?;
    let backend = if method.needs_mlm() {
        backends.mlm.as_ref().map(|m| m.info())
    } else if method.needs_translator() {
        backends.translator.as_ref().map(|t| t.info())
    } else {
        None
    };
    let mut rng = RngStream::new(StreamKey {
        global_seed: params.global_seed,
        example_id: 0,
        replica: 0,
        method,
    });
    let start = Instant::now();
    for (i, s) in sentences.iter().enumerate() {
        augmenter
            .augment_text(method, s.as_ref(), &mut rng)
            .map_err(|e| ExperimentError::from(e).context(format!("timing sentence {i}")))?;
    }
    Ok(TimingResult {
        method,
        n_sentences: sentences.len(),
        seconds: start.elapsed().as_secs_f64(),
        backend,
    })
}

/// [`time_batch`] on exactly [`TIMING_SAMPLE`] sentences.
pub fn time_augmentation<S: AsRef<str>>(
    method: Method,
    sentences: &[S],
    params: &AugmentParams,
    backends: &Backends,
    lexical: &Lexical,
) -> Result<TimingResult, ExperimentError> {
    if sentences.len() != TIMING_SAMPLE {
        return Err(ExperimentError::InvalidConfig(format!(
            "timing needs exactly {TIMING_SAMPLE} sentences, got {}",
            sentences.len()
        )));
    }
    time_batch(method, sentences, params, backends, lexical)
}
