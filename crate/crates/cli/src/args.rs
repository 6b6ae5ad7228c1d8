//! Command-line flags and the TOML config file.
//!
//! Every value flag is optional so that a config file can supply it. The
//! file's top-level keys set global flags; a table named after a command
//! (`[augment]`, `[compare]`, ...) sets that command's flags. Keys are the
//! flag names with `-` replaced by `_`. Flags given on the command line win.

use std::path::{Path, PathBuf};

use augtext::corpus::Method;
use augtext::experiments::Arm;
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "augtext", version, about = "Text augmentation experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    Mock,
    Http,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalArgs {
    /// TOML file with defaults for any flag
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Global random seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Model backends: hermetic mocks or the HTTP model shim
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendChoice>,
    /// Shim base URL (the AUGTEXT_SHIM_URL environment variable overrides it)
    #[arg(long, global = true)]
    pub shim_url: Option<String>,
    /// Per-request timeout in seconds
    #[arg(long, global = true)]
    pub timeout: Option<f64>,
    /// Retries for failed shim requests
    #[arg(long, global = true)]
    pub retries: Option<u32>,
    /// Concurrent requests allowed against the shim
    #[arg(long, global = true)]
    pub max_inflight: Option<usize>,
    /// Worker threads (default: available cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Directory for tables, plots and manifests
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Synonym lexicon, `word<TAB>syn1,syn2` per line
    #[arg(long, global = true)]
    pub lexicon: Option<PathBuf>,
    /// Stopword list, one word per line
    #[arg(long, global = true)]
    pub stopwords: Option<PathBuf>,
    /// Text column of CSV inputs
    #[arg(long, global = true)]
    pub text_column: Option<String>,
    /// Label column of CSV inputs
    #[arg(long, global = true)]
    pub label_column: Option<String>,
    /// Log more (-v info, -vv debug)
    #[arg(short, long, global = true, action = ArgAction::Count)]
    #[serde(skip)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Augment every example of a dataset
    Augment(AugmentArgs),
    /// Train the vanilla classifier and save it
    Train(TrainArgs),
    /// Keep the augmented examples with the lowest loss under a vanilla model
    Filter(FilterArgs),
    /// Compare vanilla, extra real data and augmenters over repeated runs
    Compare(CompareArgs),
    /// Vanilla accuracy as a function of training-set size
    Curve(CurveArgs),
    /// Embedding displacement and a 2-d t-SNE map of originals and augmentations
    Tsne(TsneArgs),
    /// Time augmentation of a batch of sentences
    Bench(BenchArgs),
    /// Generate a synthetic topic-classification dataset
    Synth(SynthArgs),
    /// Re-execute the run recorded in a manifest
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Augment(_) => "augment",
            Command::Train(_) => "train",
            Command::Filter(_) => "filter",
            Command::Compare(_) => "compare",
            Command::Curve(_) => "curve",
            Command::Tsne(_) => "tsne",
            Command::Bench(_) => "bench",
            Command::Synth(_) => "synth",
            Command::Replay(_) => "replay",
        }
    }
}

fn method_list() -> String {
    Method::AUGMENTERS.map(|m| m.as_str()).join(", ")
}

fn parse_method(s: &str) -> Result<Method, String> {
    match s.parse::<Method>() {
        Ok(Method::Real) | Err(_) => Err(format!("unknown method {s:?}; expected one of {}", method_list())),
        Ok(m) => Ok(m),
    }
}

fn parse_arm(s: &str) -> Result<Arm, String> {
    s.parse::<Arm>().map_err(|_| {
        format!(
            "unknown method {s:?}; expected vanilla, real_sample or one of {}",
            method_list()
        )
    })
}

/// Synthetic data used when no dataset file is given.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthDataArgs {
    /// Size of the synthetic training pool (no dataset given)
    #[arg(long)]
    pub synth_n: Option<usize>,
    /// Size of the synthetic test set (no dataset given)
    #[arg(long)]
    pub synth_test_n: Option<usize>,
    /// Classes of the synthetic data (no dataset given)
    #[arg(long)]
    pub synth_classes: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentArgs {
    /// JSONL or CSV dataset
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Augmented JSONL to write
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
    /// Top-k candidates from the masked LM
    #[arg(long)]
    pub k: Option<usize>,
    /// Fraction of words changed by the EDA-style augmenters
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Augmented copies per example
    #[arg(long)]
    pub n_aug: Option<usize>,
    #[arg(long)]
    pub source_lang: Option<String>,
    /// Pivot language for back translation
    #[arg(long)]
    pub pivot: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainArgs {
    /// Training dataset
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Optional test dataset; accuracy is printed
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Model JSON to write
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub training: TrainingArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterArgs {
    /// Augmented JSONL to filter
    #[arg(long)]
    pub aug: Option<PathBuf>,
    /// Vanilla model written by `train`
    #[arg(long)]
    pub vanilla_model: Option<PathBuf>,
    /// Fraction of lowest-loss items to keep
    #[arg(long)]
    pub keep: Option<f64>,
    /// Filtered JSONL to write
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareArgs {
    /// Training pool (synthetic data when omitted)
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Fixed test set
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Comma-separated rows: vanilla, real_sample and augmenters
    #[arg(long, value_delimiter = ',', value_parser = parse_arm)]
    pub methods: Option<Vec<Arm>>,
    /// Comma-separated augmentation ratios
    #[arg(long, value_delimiter = ',')]
    pub n_aug: Option<Vec<usize>>,
    /// Comma-separated keep fractions for loss filtering
    #[arg(long, value_delimiter = ',')]
    pub keep: Option<Vec<f64>>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Examples drawn from the pool per run
    #[arg(long)]
    pub train_size: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub source_lang: Option<String>,
    #[arg(long)]
    pub pivot: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub training: TrainingArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub synth: SynthDataArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct CurveArgs {
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Comma-separated training-set sizes
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub training: TrainingArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub synth: SynthDataArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneArgs {
    /// Dataset to sample from (synthetic data when omitted)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Comma-separated augmenters
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    pub methods: Option<Vec<Method>>,
    /// Sentences sampled
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub perplexity: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub source_lang: Option<String>,
    #[arg(long)]
    pub pivot: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub synth: SynthDataArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Augmenter to time (repeatable or comma-separated)
    #[arg(long = "method", alias = "methods", value_delimiter = ',', value_parser = parse_method)]
    #[serde(alias = "method")]
    pub methods: Option<Vec<Method>>,
    /// Sentences timed
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub source_lang: Option<String>,
    #[arg(long)]
    pub pivot: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub synth: SynthDataArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthArgs {
    /// Dataset JSONL to write; the matching lexicon goes next to it
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub min_len: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Probability that a content word belongs to the sentence's topic
    #[arg(long)]
    pub topic_share: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// manifest.json written by an earlier run
    pub manifest: PathBuf,
}

/// Per-field `Option::or`: values already set win over `base`.
pub trait Merge {
    fn merge(self, base: Self) -> Self;
}

macro_rules! merge_options {
    ($t:ty { $($f:ident),* $(,)? } $(nested { $($n:ident),* })?) => {
        impl Merge for $t {
            fn merge(self, base: Self) -> Self {
                Self {
                    $($f: self.$f.or(base.$f),)*
                    $($($n: self.$n.merge(base.$n),)*)?
                }
            }
        }
    };
}

merge_options!(SynthDataArgs {
    synth_n,
    synth_test_n,
    synth_classes
});
merge_options!(TrainingArgs {
    epochs,
    batch_size,
    learning_rate
});
merge_options!(AugmentArgs {
    input,
    output,
    method,
    k,
    alpha,
    n_aug,
    source_lang,
    pivot
});
merge_options!(TrainArgs { input, test, output } nested { training });
merge_options!(FilterArgs {
    aug,
    vanilla_model,
    keep,
    output
});
merge_options!(CompareArgs {
    train, test, methods, n_aug, keep, runs, train_size, k, alpha, source_lang, pivot
} nested { training, synth });
merge_options!(CurveArgs { train, test, sizes, runs } nested { training, synth });
merge_options!(TsneArgs { input, methods, n, perplexity, iterations, k, alpha, source_lang, pivot } nested { synth });
merge_options!(BenchArgs { input, methods, n, k, alpha, source_lang, pivot } nested { synth });
merge_options!(SynthArgs {
    output,
    n,
    classes,
    min_len,
    max_len,
    topic_share
});

impl Merge for GlobalArgs {
    fn merge(self, base: Self) -> Self {
        Self {
            config: self.config,
            seed: self.seed.or(base.seed),
            backend: self.backend.or(base.backend),
            shim_url: self.shim_url.or(base.shim_url),
            timeout: self.timeout.or(base.timeout),
            retries: self.retries.or(base.retries),
            max_inflight: self.max_inflight.or(base.max_inflight),
            jobs: self.jobs.or(base.jobs),
            out_dir: self.out_dir.or(base.out_dir),
            lexicon: self.lexicon.or(base.lexicon),
            stopwords: self.stopwords.or(base.stopwords),
            text_column: self.text_column.or(base.text_column),
            label_column: self.label_column.or(base.label_column),
            verbose: self.verbose,
        }
    }
}

/// Parsed config file: global keys plus one table per command.
#[derive(Debug, Default)]
pub struct FileConfig {
    pub global: GlobalArgs,
    sections: toml::Table,
}

const COMMANDS: [&str; 8] = [
    "augment", "train", "filter", "compare", "curve", "tsne", "bench", "synth",
];

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
        let mut sections = toml::Table::new();
        for name in COMMANDS {
            if let Some(v) = table.remove(name) {
                if !v.is_table() {
                    return Err(format!("[{name}] must be a table"));
                }
                sections.insert(name.to_string(), v);
            }
        }
        let global = GlobalArgs::deserialize(toml::Value::Table(table)).map_err(|e| e.to_string())?;
        Ok(Self { global, sections })
    }

    /// The `[name]` table, or defaults when absent. Keys that no flag
    /// consumed are rejected.
    pub fn section<T>(&self, name: &str) -> Result<T, CliError>
    where
        T: for<'de> Deserialize<'de> + Serialize + Default,
    {
        let Some(v) = self.sections.get(name) else {
            return Ok(T::default());
        };
        let err = |e: String| CliError::Usage(format!("config [{name}]: {e}"));
        let parsed = T::deserialize(v.clone()).map_err(|e| err(e.to_string()))?;
        // flattened structs cannot deny unknown fields, so compare key sets
        let used = serde_json::to_value(&parsed).map_err(|e| err(e.to_string()))?;
        for key in v.as_table().into_iter().flat_map(|t| t.keys()) {
            if used.get(key).is_none_or(serde_json::Value::is_null) {
                return Err(err(format!("unknown key {key:?}")));
            }
        }
        Ok(parsed)
    }
}
