//! Evaluation drivers: training-size curves, method comparison with optional
//! loss filtering, augmentation timing, embedding displacement and t-SNE.

mod embedding;
mod protocol;
mod timing;
pub mod tsne;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::AugmentError;
use crate::backends::BackendError;
use crate::classifier::ClassifierError;
use crate::corpus::{CorpusError, Method, UnknownMethod};
use crate::filter::FilterError;
use crate::rng::derive_seed;

pub use embedding::{
    cosine_distance, displacement, displacement_study, tsne_csv, tsne_svg, DisplacementStudy, TsnePoint,
};
pub use protocol::{compare_methods, encode_dataset, size_curve, CompareConfig, CurveConfig};
pub use timing::{time_augmentation, time_batch, TimingResult, TIMING_SAMPLE};
pub use tsne::{tsne_2d, TsneConfig};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error("vectors have different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<ExperimentError>,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Filter(#[from] FilterError),
}

impl ExperimentError {
    pub fn context(self, context: impl Into<String>) -> Self {
        ExperimentError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping context wrappers.
    pub fn root(&self) -> &ExperimentError {
        match self {
            ExperimentError::Context { source, .. } => source.root(),
            e => e,
        }
    }

    /// True when the failure came from a model backend.
    pub fn is_backend(&self) -> bool {
        match self.root() {
            ExperimentError::Backend(_) => true,
            ExperimentError::Augment(e) => e.is_backend(),
            ExperimentError::Filter(FilterError::Backend(_)) => true,
            _ => false,
        }
    }
}

/// A row of the comparison table: no augmentation, extra real data, or one
/// of the augmenters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Arm {
    Vanilla,
    RealSample,
    Augment(Method),
}

impl Arm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Arm::Vanilla => "vanilla",
            Arm::RealSample => "real_sample",
            Arm::Augment(m) => m.as_str(),
        }
    }

    /// The augmenter behind this arm, if any.
    pub fn method(&self) -> Option<Method> {
        match self {
            Arm::Augment(m) => Some(*m),
            _ => None,
        }
    }

    pub fn all() -> Vec<Arm> {
        let mut arms = vec![Arm::Vanilla, Arm::RealSample];
        arms.extend(Method::AUGMENTERS.iter().map(|&m| Arm::Augment(m)));
        arms
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Arm {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vanilla" => Ok(Arm::Vanilla),
            "real_sample" => Ok(Arm::RealSample),
            other => match other.parse::<Method>()? {
                Method::Real => Err(UnknownMethod(other.to_string())),
                m => Ok(Arm::Augment(m)),
            },
        }
    }
}

impl From<Arm> for String {
    fn from(a: Arm) -> Self {
        a.as_str().to_string()
    }
}

impl TryFrom<String> for Arm {
    type Error = UnknownMethod;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Identifies one cell of a result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellConfig {
    pub dataset: String,
    pub arm: Arm,
    /// Augmented (or extra real) examples per training example; 0 for vanilla.
    pub n_aug: usize,
    pub keep_fraction: f64,
    pub train_size: usize,
}

/// Accuracy of one configuration over repeated runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: CellConfig,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub n_runs: usize,
}

impl ExperimentResult {
    pub fn new(config: CellConfig, accuracies: Vec<f64>) -> Result<Self, ExperimentError> {
        if accuracies.len() < 2 {
            return Err(ExperimentError::InvalidConfig(format!(
                "need at least 2 runs per result, got {}",
                accuracies.len()
            )));
        }
        let (mean, std) = mean_std(&accuracies);
        Ok(Self {
            config,
            n_runs: accuracies.len(),
            accuracies,
            mean,
            std,
        })
    }

    /// Recomputes mean and std and compares them with the stored values.
    pub fn is_consistent(&self, tol: f64) -> bool {
        let (mean, std) = mean_std(&self.accuracies);
        self.n_runs == self.accuracies.len()
            && self.n_runs >= 2
            && (mean - self.mean).abs() <= tol
            && (std - self.std).abs() <= tol
    }
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// A table row: either a result or the reason the cell could not be filled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub config: CellConfig,
    pub result: Option<ExperimentResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<TableRow>,
}

impl ResultTable {
    pub fn results(&self) -> impl Iterator<Item = &ExperimentResult> {
        self.rows.iter().filter_map(|r| r.result.as_ref())
    }

    pub fn failures(&self) -> impl Iterator<Item = &TableRow> {
        self.rows.iter().filter(|r| r.result.is_none())
    }

    pub fn find(&self, arm: Arm, n_aug: usize, keep_fraction: f64) -> Option<&TableRow> {
        self.rows
            .iter()
            .find(|r| r.config.arm == arm && r.config.n_aug == n_aug && r.config.keep_fraction == keep_fraction)
    }

    /// CSV with full-precision numbers; per-run accuracies are `;`-separated.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,method,n_aug,keep_fraction,train_size,n_runs,mean,std,accuracies,error\n");
        for row in &self.rows {
            let c = &row.config;
            let (n_runs, mean, std, accs) = match &row.result {
                Some(r) => (
                    r.n_runs.to_string(),
                    r.mean.to_string(),
                    r.std.to_string(),
                    r.accuracies.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
                ),
                None => Default::default(),
            };
            let fields = [
                c.dataset.clone(),
                c.arm.to_string(),
                c.n_aug.to_string(),
                c.keep_fraction.to_string(),
                c.train_size.to_string(),
                n_runs,
                mean,
                std,
                accs,
                row.error.clone().unwrap_or_default(),
            ];
            let line: Vec<String> = fields.iter().map(|f| csv_field(f)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Aligned markdown table with accuracies as percentages, `mean ± std`.
    pub fn to_markdown(&self) -> String {
        let header = ["dataset", "method", "n_aug", "keep", "train", "runs", "accuracy (%)"];
        let rows: Vec<[String; 7]> = self
            .rows
            .iter()
            .map(|row| {
                let c = &row.config;
                let (runs, acc) = match &row.result {
                    Some(r) => (
                        r.n_runs.to_string(),
                        format!("{:.2} ± {:.2}", 100.0 * r.mean, 100.0 * r.std),
                    ),
                    None => ("0".to_string(), "failed".to_string()),
                };
                [
                    c.dataset.clone(),
                    c.arm.to_string(),
                    c.n_aug.to_string(),
                    format!("{}%", (c.keep_fraction * 100.0).round()),
                    c.train_size.to_string(),
                    runs,
                    acc,
                ]
            })
            .collect();
        let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
        for r in &rows {
            for (w, cell) in widths.iter_mut().zip(r) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let fmt_row = |cells: Vec<&str>| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
                .collect();
            format!("| {} |\n", padded.join(" | "))
        };
        let mut out = fmt_row(header.to_vec());
        out.push_str(&format!(
            "|{}|\n",
            widths.iter().map(|w| "-".repeat(w + 2)).collect::<Vec<_>>().join("|")
        ));
        for r in &rows {
            out.push_str(&fmt_row(r.iter().map(String::as_str).collect()));
        }
        for row in self.failures() {
            if let Some(e) = &row.error {
                out.push_str(&format!(
                    "\n{} n_aug={} keep={}: {}\n",
                    row.config.arm, row.config.n_aug, row.config.keep_fraction, e
                ));
            }
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Seeds used by one repetition of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeeds {
    pub subset: u64,
    pub train: u64,
    pub augment: u64,
    pub real_sample: u64,
}

impl RunSeeds {
    pub fn new(global_seed: u64, run: usize) -> Self {
        let run_seed = derive_seed(global_seed, "run", run as u64);
        Self {
            subset: derive_seed(run_seed, "subset", 0),
            train: derive_seed(run_seed, "train", 0),
            augment: derive_seed(run_seed, "augment", 0),
            real_sample: derive_seed(run_seed, "real_sample", 0),
        }
    }
}
