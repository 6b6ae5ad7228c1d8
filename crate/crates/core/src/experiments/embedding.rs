//! How far augmentation moves sentences in embedding space.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::tsne::{tsne_2d, TsneConfig};
use super::ExperimentError;
use crate::augment::{augment_dataset, AugmentParams, Lexical};
use crate::backends::{encode_chunked, Backends, EmbeddingVector};
use crate::corpus::{sample_subset, Dataset, Method};

const ENCODE_CHUNK: usize = 64;

/// `1 − cos(u, v)`. A zero vector on either side counts as distance 1.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64, ExperimentError> {
    if u.len() != v.len() {
        return Err(ExperimentError::DimensionMismatch(u.len(), v.len()));
    }
    let uu: f64 = u.iter().map(|x| x * x).sum();
    let vv: f64 = v.iter().map(|x| x * x).sum();
    if uu == 0.0 || vv == 0.0 {
        return Ok(1.0);
    }
    if u == v {
        return Ok(0.0);
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((1.0 - dot / (uu * vv).sqrt()).clamp(0.0, 2.0))
}

/// Mean cosine distance over (original, augmented) pairs.
pub fn displacement<U: AsRef<[f64]>, V: AsRef<[f64]>>(pairs: &[(U, V)]) -> Result<f64, ExperimentError> {
    if pairs.is_empty() {
        return Err(ExperimentError::InvalidConfig(
            "displacement needs at least one pair".into(),
        ));
    }
    let mut total = 0.0;
    for (u, v) in pairs {
        total += cosine_distance(u.as_ref(), v.as_ref())?;
    }
    Ok(total / pairs.len() as f64)
}

/// Originals and their augmentations for a random sample of a dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DisplacementStudy {
    pub method: Method,
    pub ids: Vec<u64>,
    pub original_texts: Vec<String>,
    pub augmented_texts: Vec<String>,
    pub originals: Vec<EmbeddingVector>,
    pub augmented: Vec<EmbeddingVector>,
    pub displacement: f64,
}

/// Samples `n` examples (stratified by label), augments each once with
/// `method`, and encodes both sides.
pub fn displacement_study(
    d: &Dataset,
    method: Method,
    n: usize,
    params: &AugmentParams,
    backends: &Backends,
    lexical: &Lexical,
    seed: u64,
) -> Result<DisplacementStudy, ExperimentError> {
    let encoder = backends
        .encoder
        .as_deref()
        .ok_or_else(|| ExperimentError::InvalidConfig("displacement needs a sentence encoder".into()))?;
    let sample = sample_subset(d, n, seed)?;
    let params = AugmentParams {
        n_aug: 1,
        global_seed: seed,
        ..params.clone()
    };
    let report = augment_dataset(&sample, method, &params, backends, lexical)?;

    let mut ids = Vec::with_capacity(report.items.len());
    let mut original_texts = Vec::with_capacity(report.items.len());
    let mut augmented_texts = Vec::with_capacity(report.items.len());
    for item in &report.items {
        let ex = sample.get(item.orig_id).expect("augmented items come from the sample");
        ids.push(ex.id);
        original_texts.push(ex.text.clone());
        augmented_texts.push(item.text.clone());
    }
    let originals = encode_chunked(encoder, &original_texts, ENCODE_CHUNK)?;
    let augmented = encode_chunked(encoder, &augmented_texts, ENCODE_CHUNK)?;
    let pairs: Vec<_> = originals.iter().zip(&augmented).collect();
    let displacement = displacement(&pairs)?;
    Ok(DisplacementStudy {
        method,
        ids,
        original_texts,
        augmented_texts,
        originals,
        augmented,
        displacement,
    })
}

impl DisplacementStudy {
    /// Joint 2-d embedding of originals followed by augmentations.
    pub fn tsne(&self, cfg: &TsneConfig) -> Result<Vec<TsnePoint>, ExperimentError> {
        let vectors: Vec<&EmbeddingVector> = self.originals.iter().chain(&self.augmented).collect();
        let coords = tsne_2d(&vectors, cfg)?;
        let flags =
            std::iter::repeat_n(false, self.originals.len()).chain(std::iter::repeat_n(true, self.augmented.len()));
        let ids = self.ids.iter().chain(&self.ids);
        Ok(ids
            .zip(flags)
            .zip(coords)
            .map(|((&id, is_augmented), [x, y])| TsnePoint { id, is_augmented, x, y })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsnePoint {
    pub id: u64,
    pub is_augmented: bool,
    pub x: f64,
    pub y: f64,
}

/// `id,is_augmented,x,y` with full-precision coordinates.
pub fn tsne_csv(points: &[TsnePoint]) -> String {
    let mut out = String::from("id,is_augmented,x,y\n");
    for p in points {
        let _ = writeln!(out, "{},{},{},{}", p.id, p.is_augmented, p.x, p.y);
    }
    out
}

/// Scatter plot: originals in blue, augmentations in orange.
pub fn tsne_svg(points: &[TsnePoint], title: &str) -> String {
    const SIZE: f64 = 480.0;
    const MARGIN: f64 = 30.0;
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-12);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let total = SIZE + 20.0;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{total}" viewBox="0 0 {SIZE} {total}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{MARGIN}" y="20" font-family="sans-serif" font-size="14">{}</text>"#,
        xml_escape(title)
    );
    for p in points {
        let cx = MARGIN + (p.x - x0) * scale;
        let cy = 20.0 + MARGIN + (y1 - p.y) * scale;
        let colour = if p.is_augmented { "#ff7f0e" } else { "#1f77b4" };
        let _ = writeln!(
            out,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3" fill="{colour}" fill-opacity="0.8"><title>{} {}</title></circle>"#,
            p.id,
            if p.is_augmented { "augmented" } else { "real" }
        );
    }
    let legend_y = total - 8.0;
    let _ = writeln!(
        out,
        r##"<circle cx="{MARGIN}" cy="{}" r="4" fill="#1f77b4"/><text x="{}" y="{legend_y}" font-family="sans-serif" font-size="12">real</text>"##,
        legend_y - 4.0,
        MARGIN + 8.0
    );
    let _ = writeln!(
        out,
        r##"<circle cx="{}" cy="{}" r="4" fill="#ff7f0e"/><text x="{}" y="{legend_y}" font-family="sans-serif" font-size="12">augmented</text>"##,
        MARGIN + 60.0,
        legend_y - 4.0,
        MARGIN + 68.0
    );
    out.push_str("</svg>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
