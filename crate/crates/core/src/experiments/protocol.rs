//! Training-size curves and the method comparison.

use std::collections::{BTreeSet, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Arm, CellConfig, ExperimentError, ExperimentResult, ResultTable, RunSeeds, TableRow};
use crate::augment::{augment_dataset, AugmentParams, Augmenter, Lexical};
use crate::backends::{encode_chunked, Backends, EmbeddingVector, SentenceEncoder};
use crate::classifier::{evaluate, per_example_loss, train, LabelMap, MlpParams, TrainConfig};
use crate::corpus::{sample_subset, Dataset, Method};
use crate::filter::{select_lowest_loss, FilterConfig};
use crate::rng::derive_seed;

const ENCODE_CHUNK: usize = 64;

type Pair<'a> = (&'a EmbeddingVector, usize);

/// Encodes every example of `d` and maps its label through `labels`.
pub fn encode_dataset(
    d: &Dataset,
    encoder: &dyn SentenceEncoder,
    labels: &LabelMap,
) -> Result<Vec<(EmbeddingVector, usize)>, ExperimentError> {
    let targets = label_indices(d.examples().iter().map(|e| e.label.as_str()), labels)?;
    let texts: Vec<&str> = d.examples().iter().map(|e| e.text.as_str()).collect();
    let vectors = encode_chunked(encoder, &texts, ENCODE_CHUNK)?;
    Ok(vectors.into_iter().zip(targets).collect())
}

fn label_indices<'a>(
    labels_in: impl Iterator<Item = &'a str>,
    labels: &LabelMap,
) -> Result<Vec<usize>, ExperimentError> {
    labels_in
        .map(|l| {
            labels
                .index(l)
                .ok_or_else(|| ExperimentError::InvalidConfig(format!("label {l:?} is not in the training label set")))
        })
        .collect()
}

/// Embeddings for a chosen set of examples, looked up by id.
struct EmbeddingCache {
    index: HashMap<u64, usize>,
    pairs: Vec<(EmbeddingVector, usize)>,
}

impl EmbeddingCache {
    fn build(
        d: &Dataset,
        ids: &BTreeSet<u64>,
        encoder: &dyn SentenceEncoder,
        labels: &LabelMap,
    ) -> Result<Self, ExperimentError> {
        let examples: Vec<_> = d.examples().iter().filter(|e| ids.contains(&e.id)).collect();
        let targets = label_indices(examples.iter().map(|e| e.label.as_str()), labels)?;
        let texts: Vec<&str> = examples.iter().map(|e| e.text.as_str()).collect();
        let vectors = if texts.is_empty() {
            Vec::new()
        } else {
            encode_chunked(encoder, &texts, ENCODE_CHUNK)?
        };
        Ok(Self {
            index: examples.iter().enumerate().map(|(i, e)| (e.id, i)).collect(),
            pairs: vectors.into_iter().zip(targets).collect(),
        })
    }

    fn pairs_for(&self, d: &Dataset) -> Vec<Pair<'_>> {
        d.examples()
            .iter()
            .map(|e| {
                let (v, y) = &self.pairs[self.index[&e.id]];
                (v, *y)
            })
            .collect()
    }
}

fn prepare_labels(d: &Dataset, test: &Dataset) -> Result<LabelMap, ExperimentError> {
    d.ensure_multiclass()?;
    let labels = LabelMap::new(d.label_set().iter().cloned());
    if let Some(l) = test.label_set().iter().find(|l| labels.index(l).is_none()) {
        return Err(ExperimentError::InvalidConfig(format!(
            "test label {l:?} does not occur in the training data"
        )));
    }
    Ok(labels)
}

fn require_encoder(backends: &Backends) -> Result<&dyn SentenceEncoder, ExperimentError> {
    backends
        .encoder
        .as_deref()
        .ok_or_else(|| ExperimentError::InvalidConfig("experiments need a sentence encoder backend".into()))
}

fn fit_and_score(
    train_set: &[Pair<'_>],
    test: &[(EmbeddingVector, usize)],
    num_classes: usize,
    cfg: &TrainConfig,
) -> Result<(MlpParams, f64), ExperimentError> {
    let params = train(train_set, num_classes, cfg)?;
    let acc = evaluate(&params, test)?;
    Ok((params, acc))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveConfig {
    pub sizes: Vec<usize>,
    pub n_runs: usize,
    pub global_seed: u64,
    pub train: TrainConfig,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self {
            sizes: vec![100, 200, 400, 800],
            n_runs: 10,
            global_seed: 0,
            train: TrainConfig::default(),
        }
    }
}

/// Test accuracy of the vanilla classifier as a function of training-set
/// size. Every point reuses the same test set.
pub fn size_curve(
    d: &Dataset,
    test: &Dataset,
    cfg: &CurveConfig,
    encoder: &dyn SentenceEncoder,
) -> Result<Vec<ExperimentResult>, ExperimentError> {
    if cfg.n_runs < 2 {
        return Err(ExperimentError::InvalidConfig("n_runs must be at least 2".into()));
    }
    if cfg.sizes.is_empty() {
        return Err(ExperimentError::InvalidConfig("no training sizes given".into()));
    }
    cfg.train.validate()?;
    if let Some(&s) = cfg.sizes.iter().find(|&&s| s == 0 || s > d.len()) {
        return Err(ExperimentError::InvalidConfig(format!(
            "training size {s} is outside 1..={}",
            d.len()
        )));
    }
    let labels = prepare_labels(d, test)?;

    let jobs: Vec<(usize, usize)> = cfg
        .sizes
        .iter()
        .flat_map(|&s| (0..cfg.n_runs).map(move |r| (s, r)))
        .collect();
    let subsets = jobs
        .iter()
        .map(|&(size, run)| {
            sample_subset(d, size, RunSeeds::new(cfg.global_seed, run).subset)
                .map_err(|e| ExperimentError::from(e).context(format!("size {size}, run {run}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ids: BTreeSet<u64> = subsets.iter().flat_map(|s| s.examples().iter().map(|e| e.id)).collect();
    let cache = EmbeddingCache::build(d, &ids, encoder, &labels)?;
    let test_pairs = encode_dataset(test, encoder, &labels)?;

    let accuracies = jobs
        .par_iter()
        .zip(&subsets)
        .map(|(&(size, run), subset)| {
            let train_cfg = TrainConfig {
                seed: RunSeeds::new(cfg.global_seed, run).train,
                ..cfg.train.clone()
            };
            fit_and_score(&cache.pairs_for(subset), &test_pairs, labels.len(), &train_cfg)
                .map(|(_, acc)| acc)
                .map_err(|e| e.context(format!("size {size}, run {run}")))
        })
        .collect::<Result<Vec<f64>, _>>()?;

    cfg.sizes
        .iter()
        .zip(accuracies.chunks(cfg.n_runs))
        .map(|(&size, accs)| {
            ExperimentResult::new(
                CellConfig {
                    dataset: d.name().to_string(),
                    arm: Arm::Vanilla,
                    n_aug: 0,
                    keep_fraction: 1.0,
                    train_size: size,
                },
                accs.to_vec(),
            )
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareConfig {
    pub train_size: usize,
    pub arms: Vec<Arm>,
    /// Augmentation ratios to evaluate. Back translation always uses 1.
    pub n_aug: Vec<usize>,
    pub keep_fractions: Vec<f64>,
    pub n_runs: usize,
    pub global_seed: u64,
    /// k, alpha and languages for the augmenters. Its `n_aug` and
    /// `global_seed` are replaced per run.
    pub augment: AugmentParams,
    /// Its `seed` is replaced per run.
    pub train: TrainConfig,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            train_size: 100,
            arms: Arm::all(),
            n_aug: vec![1, 4],
            keep_fractions: vec![1.0],
            n_runs: 10,
            global_seed: 0,
            augment: AugmentParams::default(),
            train: TrainConfig::default(),
        }
    }
}

impl CompareConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidConfig(m));
        if self.n_runs < 2 {
            return bad(format!("n_runs must be at least 2, got {}", self.n_runs));
        }
        if self.train_size == 0 {
            return bad("train_size must be positive".into());
        }
        if self.arms.is_empty() {
            return bad("no methods given".into());
        }
        let distinct: HashSet<_> = self.arms.iter().collect();
        if distinct.len() != self.arms.len() {
            return bad("methods are listed more than once".into());
        }
        if self.n_aug.is_empty() || self.n_aug.contains(&0) {
            return bad("n_aug values must be positive".into());
        }
        if self.keep_fractions.is_empty() {
            return bad("no keep fractions given".into());
        }
        for &k in &self.keep_fractions {
            FilterConfig::new(k)?;
        }
        self.augment.validate()?;
        self.train.validate()?;
        Ok(())
    }

    fn n_aug_for(&self, m: Method) -> Vec<usize> {
        if m == Method::Bt {
            vec![1]
        } else {
            self.n_aug.clone()
        }
    }

    /// Cells in table order.
    pub fn cells(&self, dataset: &str) -> Vec<CellConfig> {
        let cell = |arm, n_aug, keep_fraction| CellConfig {
            dataset: dataset.to_string(),
            arm,
            n_aug,
            keep_fraction,
            train_size: self.train_size,
        };
        let mut out = Vec::new();
        for &arm in &self.arms {
            match arm {
                Arm::Vanilla => out.push(cell(arm, 0, 1.0)),
                Arm::RealSample => out.extend(self.n_aug.iter().map(|&n| cell(arm, n, 1.0))),
                Arm::Augment(m) => {
                    for n in self.n_aug_for(m) {
                        out.extend(self.keep_fractions.iter().map(|&k| cell(arm, n, k)));
                    }
                }
            }
        }
        out
    }
}

/// Per-run data decided before any model is trained.
struct RunPlan {
    subset: Dataset,
    /// Extra real examples per n_aug value, for the real_sample arm.
    real: Vec<Result<Dataset, String>>,
}

/// Compares vanilla training, extra real data and each augmenter, with the
/// augmented pool optionally filtered by the same run's vanilla model.
///
/// Each run draws its own subset; every model in a run starts from the same
/// initialisation seed. A cell that fails in any run is reported as a gap
/// instead of failing the table.
pub fn compare_methods(
    d: &Dataset,
    test: &Dataset,
    cfg: &CompareConfig,
    backends: &Backends,
    lexical: &Lexical,
) -> Result<ResultTable, ExperimentError> {
    cfg.validate()?;
    let encoder = require_encoder(backends)?;
    let labels = prepare_labels(d, test)?;
    if cfg.train_size > d.len() {
        return Err(ExperimentError::InvalidConfig(format!(
            "train_size {} exceeds the {} available examples",
            cfg.train_size,
            d.len()
        )));
    }
    for arm in &cfg.arms {
        if let Arm::Augment(m) = arm {
            Augmenter::new(&cfg.augment, backends, lexical).check(*m)?;
        }
    }

    let wants_real = cfg.arms.contains(&Arm::RealSample);
    let plans = (0..cfg.n_runs)
        .map(|run| {
            let seeds = RunSeeds::new(cfg.global_seed, run);
            let subset = sample_subset(d, cfg.train_size, seeds.subset)?;
            let mut real = Vec::new();
            if wants_real {
                let chosen: HashSet<u64> = subset.examples().iter().map(|e| e.id).collect();
                let pool = d.without(&chosen);
                for &n in &cfg.n_aug {
                    let extra = pool.as_ref().map_err(|e| e.to_string()).and_then(|pool| {
                        sample_subset(
                            pool,
                            cfg.train_size * n,
                            derive_seed(seeds.real_sample, "n_aug", n as u64),
                        )
                        .map_err(|e| e.to_string())
                    });
                    real.push(extra);
                }
            }
            Ok(RunPlan { subset, real })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;

    let mut ids = BTreeSet::new();
    for plan in &plans {
        ids.extend(plan.subset.examples().iter().map(|e| e.id));
        for extra in plan.real.iter().flatten() {
            ids.extend(extra.examples().iter().map(|e| e.id));
        }
    }
    let cache = EmbeddingCache::build(d, &ids, encoder, &labels)?;
    let test_pairs = encode_dataset(test, encoder, &labels)?;

    let ctx = RunContext {
        cfg,
        backends,
        lexical,
        encoder,
        labels: &labels,
        cache: &cache,
        test: &test_pairs,
    };
    let per_run: Vec<Vec<Result<f64, String>>> = plans
        .par_iter()
        .enumerate()
        .map(|(run, plan)| ctx.run(run, plan))
        .collect();

    let cells = cfg.cells(d.name());
    let rows = cells
        .into_iter()
        .enumerate()
        .map(|(i, config)| {
            let mut accs = Vec::with_capacity(cfg.n_runs);
            for (run, results) in per_run.iter().enumerate() {
                match &results[i] {
                    Ok(a) => accs.push(*a),
                    Err(e) => {
                        return TableRow {
                            config,
                            result: None,
                            error: Some(format!("run {run}: {e}")),
                        }
                    }
                }
            }
            match ExperimentResult::new(config.clone(), accs) {
                Ok(r) => TableRow {
                    config,
                    result: Some(r),
                    error: None,
                },
                Err(e) => TableRow {
                    config,
                    result: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(ResultTable { rows })
}

struct RunContext<'a> {
    cfg: &'a CompareConfig,
    backends: &'a Backends,
    lexical: &'a Lexical,
    encoder: &'a dyn SentenceEncoder,
    labels: &'a LabelMap,
    cache: &'a EmbeddingCache,
    test: &'a [(EmbeddingVector, usize)],
}

impl RunContext<'_> {
    /// One result per cell, in [`CompareConfig::cells`] order.
    fn run(&self, run: usize, plan: &RunPlan) -> Vec<Result<f64, String>> {
        let cfg = self.cfg;
        let seeds = RunSeeds::new(cfg.global_seed, run);
        let train_cfg = TrainConfig {
            seed: seeds.train,
            ..cfg.train.clone()
        };
        let classes = self.labels.len();
        let base = self.cache.pairs_for(&plan.subset);
        let vanilla = fit_and_score(&base, self.test, classes, &train_cfg).map_err(|e| format!("vanilla: {e}"));

        let with_extra = |extra: &[Pair<'_>]| -> Result<f64, String> {
            let mut set = base.clone();
            set.extend_from_slice(extra);
            fit_and_score(&set, self.test, classes, &train_cfg)
                .map(|(_, acc)| acc)
                .map_err(|e| e.to_string())
        };

        let mut out = Vec::new();
        for &arm in &cfg.arms {
            match arm {
                Arm::Vanilla => out.push(vanilla.as_ref().map(|(_, acc)| *acc).map_err(Clone::clone)),
                Arm::RealSample => {
                    for extra in &plan.real {
                        out.push(
                            extra
                                .clone()
                                .and_then(|extra| with_extra(&self.cache.pairs_for(&extra))),
                        );
                    }
                }
                Arm::Augment(m) => {
                    let n_augs = cfg.n_aug_for(m);
                    let cells = n_augs.len() * cfg.keep_fractions.len();
                    match self.augmented_cells(m, &n_augs, plan, seeds.augment, vanilla.as_ref().ok(), &with_extra) {
                        Ok(results) => out.extend(results),
                        Err(e) => out.extend(std::iter::repeat_n(Err(e), cells)),
                    }
                }
            }
        }
        out
    }

    /// Augments the subset once at the largest ratio and reuses replica
    /// prefixes for the smaller ones.
    fn augmented_cells(
        &self,
        method: Method,
        n_augs: &[usize],
        plan: &RunPlan,
        augment_seed: u64,
        vanilla: Option<&(MlpParams, f64)>,
        with_extra: &dyn Fn(&[Pair<'_>]) -> Result<f64, String>,
    ) -> Result<Vec<Result<f64, String>>, String> {
        let cfg = self.cfg;
        let params = AugmentParams {
            n_aug: n_augs.iter().copied().max().unwrap_or(1),
            global_seed: augment_seed,
            ..cfg.augment.clone()
        };
        let report =
            augment_dataset(&plan.subset, method, &params, self.backends, self.lexical).map_err(|e| e.to_string())?;
        let needs_scores = cfg.keep_fractions.iter().any(|&k| k < 1.0);

        let mut out = Vec::new();
        for &n in n_augs {
            let items = report.first_replicas(n);
            let targets =
                label_indices(items.iter().map(|i| i.label.as_str()), self.labels).map_err(|e| e.to_string())?;
            let texts: Vec<&str> = items.iter().map(|i| i.text.as_str()).collect();
            let vectors = if texts.is_empty() {
                Vec::new()
            } else {
                encode_chunked(self.encoder, &texts, ENCODE_CHUNK).map_err(|e| e.to_string())?
            };
            let pairs: Vec<Pair<'_>> = vectors.iter().zip(targets).collect();
            let losses = if needs_scores {
                vanilla.map(|(model, _)| per_example_loss(model, &pairs))
            } else {
                None
            };
            for &keep in &cfg.keep_fractions {
                let kept: Vec<Pair<'_>> = if keep >= 1.0 {
                    pairs.clone()
                } else {
                    match &losses {
                        Some(l) => select_lowest_loss(l, keep).into_iter().map(|i| pairs[i]).collect(),
                        None => {
                            out.push(Err("no vanilla model to score with".to_string()));
                            continue;
                        }
                    }
                };
                out.push(with_extra(&kept));
            }
        }
        Ok(out)
    }
}
