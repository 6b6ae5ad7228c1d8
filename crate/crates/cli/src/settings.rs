//! Fully resolved run settings.
//!
//! A [`Job`] holds every value a run depends on, with defaults filled in and
//! input paths made absolute. Output locations are file names relative to
//! the output directory, so a manifest does not depend on where it was
//! written and can be replayed elsewhere.

use std::path::{Path, PathBuf};

use augtext::augment::AugmentParams;
use augtext::backends::{BackendKind, SHIM_URL_ENV};
use augtext::corpus::{load_dataset, Dataset, Method};
use augtext::experiments::{Arm, CompareConfig, CurveConfig, TsneConfig};
use augtext::rng::derive_seed;
use augtext::synth::{generate, SynthConfig};
use augtext::{FilterConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::args::{
    AugmentArgs, BackendChoice, BenchArgs, CompareArgs, CurveArgs, FilterArgs, GlobalArgs, SynthArgs, SynthDataArgs,
    TrainArgs, TrainingArgs, TsneArgs,
};
use crate::error::CliError;

pub const DEFAULT_KEEP: f64 = 0.8;
const DEFAULT_SYNTH_N: usize = 1000;
const DEFAULT_SYNTH_TEST_N: usize = 400;
const DEFAULT_SYNTH_CLASSES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSettings {
    pub kind: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shim_url: Option<String>,
    pub timeout_secs: f64,
    pub retries: u32,
    pub max_inflight: usize,
}

impl BackendSettings {
    fn from_args(g: &GlobalArgs) -> Result<Self, CliError> {
        let defaults = augtext::backends::BackendConfig::default();
        let kind = match g.backend.unwrap_or(BackendChoice::Http) {
            BackendChoice::Mock => BackendKind::Mock,
            BackendChoice::Http => BackendKind::Http,
        };
        let env = std::env::var(SHIM_URL_ENV).ok().filter(|u| !u.trim().is_empty());
        let shim_url = match kind {
            BackendKind::Mock => None,
            BackendKind::Http => env.map(|u| u.trim().to_string()).or_else(|| g.shim_url.clone()),
        };
        let timeout_secs = g.timeout.unwrap_or(defaults.timeout.as_secs_f64());
        if !(timeout_secs.is_finite() && timeout_secs > 0.0) {
            return Err(CliError::Usage(format!(
                "--timeout must be positive, got {timeout_secs}"
            )));
        }
        let max_inflight = g.max_inflight.unwrap_or(defaults.max_inflight);
        if max_inflight == 0 {
            return Err(CliError::Usage("--max-inflight must be at least 1".into()));
        }
        Ok(Self {
            kind,
            shim_url,
            timeout_secs,
            retries: g.retries.unwrap_or(defaults.retries),
            max_inflight,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LexicalSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<PathBuf>,
}

impl LexicalSettings {
    fn from_args(g: &GlobalArgs) -> Result<Self, CliError> {
        Ok(Self {
            lexicon: g.lexicon.as_deref().map(absolute).transpose()?,
            stopwords: g.stopwords.as_deref().map(absolute).transpose()?,
        })
    }
}

/// Where a dataset comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    File {
        path: PathBuf,
        text_column: String,
        label_column: String,
    },
    Synthetic(SynthConfig),
}

impl DataSource {
    fn file(path: &Path, g: &GlobalArgs) -> Result<Self, CliError> {
        Ok(DataSource::File {
            path: absolute(path)?,
            text_column: g.text_column.clone().unwrap_or_else(|| "text".into()),
            label_column: g.label_column.clone().unwrap_or_else(|| "label".into()),
        })
    }

    pub fn load(&self) -> Result<Dataset, CliError> {
        match self {
            DataSource::File {
                path,
                text_column,
                label_column,
            } => Ok(load_dataset(path, text_column, label_column)?),
            DataSource::Synthetic(cfg) => Ok(generate(cfg)?),
        }
    }

    pub fn synthetic_classes(&self) -> Option<usize> {
        match self {
            DataSource::Synthetic(cfg) => Some(cfg.num_classes),
            DataSource::File { .. } => None,
        }
    }
}

fn absolute(p: &Path) -> Result<PathBuf, CliError> {
    std::path::absolute(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
}

/// Training pool and test set from files, or both synthetic.
fn train_test(
    train: Option<&Path>,
    test: Option<&Path>,
    synth: &SynthDataArgs,
    seed: u64,
    g: &GlobalArgs,
) -> Result<(DataSource, DataSource), CliError> {
    match (train, test) {
        (Some(tr), Some(te)) => Ok((DataSource::file(tr, g)?, DataSource::file(te, g)?)),
        (None, None) => {
            let classes = synth.synth_classes.unwrap_or(DEFAULT_SYNTH_CLASSES);
            let make = |name: &str, n: usize| {
                DataSource::Synthetic(SynthConfig {
                    name: name.into(),
                    num_classes: classes,
                    n,
                    seed: derive_seed(seed, name, 0),
                    ..SynthConfig::default()
                })
            };
            Ok((
                make("synthetic", synth.synth_n.unwrap_or(DEFAULT_SYNTH_N)),
                make("synthetic_test", synth.synth_test_n.unwrap_or(DEFAULT_SYNTH_TEST_N)),
            ))
        }
        _ => Err(CliError::Usage(
            "give both --train and --test, or neither for synthetic data".into(),
        )),
    }
}

/// A single dataset from a file, or synthetic.
fn single(input: Option<&Path>, synth: &SynthDataArgs, seed: u64, g: &GlobalArgs) -> Result<DataSource, CliError> {
    match input {
        Some(p) => DataSource::file(p, g),
        None => Ok(DataSource::Synthetic(SynthConfig {
            num_classes: synth.synth_classes.unwrap_or(DEFAULT_SYNTH_CLASSES),
            n: synth.synth_n.unwrap_or(DEFAULT_SYNTH_N),
            seed: derive_seed(seed, "synthetic", 0),
            ..SynthConfig::default()
        })),
    }
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("missing required flag --{flag}")))
}

/// Splits an output path into its directory and file name.
fn split_output(path: &Path) -> Result<(PathBuf, String), CliError> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| CliError::Usage(format!("{}: not a file path", path.display())))?;
    let dir = absolute(path)?
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((dir, name.to_string()))
}

fn augment_params(
    seed: u64,
    k: Option<usize>,
    alpha: Option<f64>,
    n_aug: Option<usize>,
    source_lang: Option<String>,
    pivot: Option<String>,
) -> Result<AugmentParams, CliError> {
    let d = AugmentParams::default();
    let p = AugmentParams {
        k: k.unwrap_or(d.k),
        alpha: alpha.unwrap_or(d.alpha),
        n_aug: n_aug.unwrap_or(d.n_aug),
        source_lang: source_lang.unwrap_or(d.source_lang),
        pivot_lang: pivot.unwrap_or(d.pivot_lang),
        global_seed: seed,
    };
    p.validate()?;
    Ok(p)
}

fn train_config(seed: u64, t: &TrainingArgs) -> Result<TrainConfig, CliError> {
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        epochs: t.epochs.unwrap_or(d.epochs),
        batch_size: t.batch_size.unwrap_or(d.batch_size),
        learning_rate: t.learning_rate.unwrap_or(d.learning_rate),
        seed,
        ..d
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AugmentJob {
    pub input: DataSource,
    pub output: String,
    pub method: Method,
    pub params: AugmentParams,
    pub backend: BackendSettings,
    pub lexical: LexicalSettings,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainJob {
    pub input: DataSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<DataSource>,
    pub output: String,
    pub train: TrainConfig,
    pub backend: BackendSettings,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterJob {
    pub augmented: PathBuf,
    pub model: PathBuf,
    pub filter: FilterConfig,
    pub output: String,
    pub backend: BackendSettings,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareJob {
    pub train: DataSource,
    pub test: DataSource,
    pub config: CompareConfig,
    pub backend: BackendSettings,
    pub lexical: LexicalSettings,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveJob {
    pub train: DataSource,
    pub test: DataSource,
    pub config: CurveConfig,
    pub backend: BackendSettings,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TsneJob {
    pub input: DataSource,
    pub methods: Vec<Method>,
    pub n: usize,
    pub params: AugmentParams,
    pub tsne: TsneConfig,
    pub backend: BackendSettings,
    pub lexical: LexicalSettings,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchJob {
    pub input: DataSource,
    pub methods: Vec<Method>,
    pub n: usize,
    pub params: AugmentParams,
    pub backend: BackendSettings,
    pub lexical: LexicalSettings,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthJob {
    pub config: SynthConfig,
    pub output: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", content = "settings", rename_all = "lowercase")]
pub enum Job {
    Augment(AugmentJob),
    Train(TrainJob),
    Filter(FilterJob),
    Compare(CompareJob),
    Curve(CurveJob),
    Tsne(TsneJob),
    Bench(BenchJob),
    Synth(SynthJob),
}

impl Job {
    pub fn name(&self) -> &'static str {
        match self {
            Job::Augment(_) => "augment",
            Job::Train(_) => "train",
            Job::Filter(_) => "filter",
            Job::Compare(_) => "compare",
            Job::Curve(_) => "curve",
            Job::Tsne(_) => "tsne",
            Job::Bench(_) => "bench",
            Job::Synth(_) => "synth",
        }
    }

    pub fn global_seed(&self) -> u64 {
        match self {
            Job::Augment(j) => j.params.global_seed,
            Job::Train(j) => j.train.seed,
            Job::Filter(_) => 0,
            Job::Compare(j) => j.config.global_seed,
            Job::Curve(j) => j.config.global_seed,
            Job::Tsne(j) => j.tsne.seed,
            Job::Bench(j) => j.params.global_seed,
            Job::Synth(j) => j.config.seed,
        }
    }

    /// File name of the manifest inside the output directory.
    pub fn manifest_name(&self) -> String {
        match self {
            Job::Augment(AugmentJob { output, .. })
            | Job::Train(TrainJob { output, .. })
            | Job::Filter(FilterJob { output, .. })
            | Job::Synth(SynthJob { output, .. }) => format!("{output}.manifest.json"),
            _ => "manifest.json".into(),
        }
    }
}

fn out_dir(g: &GlobalArgs) -> Result<PathBuf, CliError> {
    absolute(g.out_dir.as_deref().unwrap_or(Path::new(".")))
}

pub fn augment_job(g: &GlobalArgs, a: AugmentArgs) -> Result<(Job, PathBuf), CliError> {
    let seed = g.seed.unwrap_or(0);
    let input = DataSource::file(&required(a.input, "input")?, g)?;
    let (dir, output) = split_output(&required(a.output, "output")?)?;
    let job = AugmentJob {
        input,
        output,
        method: required(a.method, "method")?,
        params: augment_params(seed, a.k, a.alpha, a.n_aug, a.source_lang, a.pivot)?,
        backend: BackendSettings::from_args(g)?,
        lexical: LexicalSettings::from_args(g)?,
    };
    Ok((Job::Augment(job), dir))
}

pub fn train_job(g: &GlobalArgs, a: TrainArgs) -> Result<(Job, PathBuf), CliError> {
    let seed = g.seed.unwrap_or(0);
    let (dir, output) = split_output(&required(a.output, "output")?)?;
    let job = TrainJob {
        input: DataSource::file(&required(a.input, "input")?, g)?,
        test: a.test.as_deref().map(|t| DataSource::file(t, g)).transpose()?,
        output,
        train: train_config(seed, &a.training)?,
        backend: BackendSettings::from_args(g)?,
    };
    Ok((Job::Train(job), dir))
}

pub fn filter_job(g: &GlobalArgs, a: FilterArgs) -> Result<(Job, PathBuf), CliError> {
    let (dir, output) = split_output(&required(a.output, "output")?)?;
    let job = FilterJob {
        augmented: absolute(&required(a.aug, "aug")?)?,
        model: absolute(&required(a.vanilla_model, "vanilla-model")?)?,
        filter: FilterConfig::new(a.keep.unwrap_or(DEFAULT_KEEP))?,
        output,
        backend: BackendSettings::from_args(g)?,
    };
    Ok((Job::Filter(job), dir))
}

pub fn compare_job(g: &GlobalArgs, a: CompareArgs) -> Result<(Job, PathBuf), CliError> {
    let seed = g.seed.unwrap_or(0);
    let (train, test) = train_test(a.train.as_deref(), a.test.as_deref(), &a.synth, seed, g)?;
    let d = CompareConfig::default();
    let config = CompareConfig {
        train_size: a.train_size.unwrap_or(d.train_size),
        arms: a.methods.unwrap_or_else(Arm::all),
        n_aug: a.n_aug.unwrap_or(d.n_aug),
        keep_fractions: a.keep.unwrap_or_else(|| vec![DEFAULT_KEEP]),
        n_runs: a.runs.unwrap_or(d.n_runs),
        global_seed: seed,
        augment: augment_params(seed, a.k, a.alpha, None, a.source_lang, a.pivot)?,
        train: train_config(seed, &a.training)?,
    };
    config.validate()?;
    let job = CompareJob {
        train,
        test,
        config,
        backend: BackendSettings::from_args(g)?,
        lexical: LexicalSettings::from_args(g)?,
    };
    Ok((Job::Compare(job), out_dir(g)?))
}

pub fn curve_job(g: &GlobalArgs, a: CurveArgs) -> Result<(Job, PathBuf), CliError> {
    let seed = g.seed.unwrap_or(0);
    let (train, test) = train_test(a.train.as_deref(), a.test.as_deref(), &a.synth, seed, g)?;
    let d = CurveConfig::default();
    let config = CurveConfig {
        sizes: a.sizes.unwrap_or(d.sizes),
        n_runs: a.runs.unwrap_or(d.n_runs),
        global_seed: seed,
        train: train_config(seed, &a.training)?,
    };
    let job = CurveJob {
        train,
        test,
        config,
        backend: BackendSettings::from_args(g)?,
    };
    Ok((Job::Curve(job), out_dir(g)?))
}

pub fn tsne_job(g: &GlobalArgs, a: TsneArgs) -> Result<(Job, PathBuf), CliError> {
    let seed = g.seed.unwrap_or(0);
    let tsne = TsneConfig {
        perplexity: a.perplexity,
        iterations: a.iterations.unwrap_or(TsneConfig::default().iterations),
        seed,
        ..TsneConfig::default()
    };
    let job = TsneJob {
        input: single(a.input.as_deref(), &a.synth, seed, g)?,
        methods: a.methods.unwrap_or_else(|| vec![Method::Imf]),
        n: a.n.unwrap_or(100),
        params: augment_params(seed, a.k, a.alpha, Some(1), a.source_lang, a.pivot)?,
        tsne,
        backend: BackendSettings::from_args(g)?,
        lexical: LexicalSettings::from_args(g)?,
    };
    Ok((Job::Tsne(job), out_dir(g)?))
}

pub fn bench_job(g: &GlobalArgs, a: BenchArgs) -> Result<(Job, PathBuf), CliError> {
    let seed = g.seed.unwrap_or(0);
    let job = BenchJob {
        input: single(a.input.as_deref(), &a.synth, seed, g)?,
        methods: a.methods.unwrap_or_else(|| vec![Method::Imf]),
        n: a.n.unwrap_or(augtext::experiments::TIMING_SAMPLE),
        params: augment_params(seed, a.k, a.alpha, Some(1), a.source_lang, a.pivot)?,
        backend: BackendSettings::from_args(g)?,
        lexical: LexicalSettings::from_args(g)?,
    };
    Ok((Job::Bench(job), out_dir(g)?))
}

pub fn synth_job(g: &GlobalArgs, a: SynthArgs) -> Result<(Job, PathBuf), CliError> {
    let d = SynthConfig::default();
    let (dir, output) = split_output(&required(a.output, "output")?)?;
    let name = Path::new(&output)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("synthetic")
        .to_string();
    let config = SynthConfig {
        name,
        num_classes: a.classes.unwrap_or(d.num_classes),
        n: a.n.unwrap_or(d.n),
        min_len: a.min_len.unwrap_or(d.min_len),
        max_len: a.max_len.unwrap_or(d.max_len),
        topic_share: a.topic_share.unwrap_or(d.topic_share),
        seed: g.seed.unwrap_or(0),
    };
    Ok((Job::Synth(SynthJob { config, output }), dir))
}
