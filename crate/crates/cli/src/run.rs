use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use augtext::augment::{augment_dataset, Lexical, StopWords, SynonymLexicon};
use augtext::backends::{
    BackendConfig, BackendInfo, BackendKind, Backends, BagOfWordsEncoder, HttpBackend, SuffixTranslator, VocabMlm,
};
use augtext::classifier::{evaluate, train, SavedModel};
use augtext::corpus::{load_augmented, sample_subset, save_augmented, save_jsonl, Dataset, Method};
use augtext::experiments::{
    compare_methods, displacement_study, encode_dataset, size_curve, time_batch, tsne_csv, tsne_svg, ResultTable,
    TableRow,
};
use augtext::filter::{filter_lowest_loss, score_augmented};
use augtext::synth::{generate, SynthVocabulary};
use augtext::{word_tokenize, LabelMap};

use crate::error::CliError;
use crate::settings::{
    AugmentJob, BackendSettings, BenchJob, CompareJob, CurveJob, FilterJob, Job, LexicalSettings, SynthJob, TrainJob,
    TsneJob,
};

/// What a finished job produced.
#[derive(Debug, Default)]
pub struct Outcome {
    /// File names written, relative to the output directory.
    pub outputs: Vec<String>,
    pub backends: Vec<BackendInfo>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Needs {
    mlm: bool,
    encoder: bool,
    translator: bool,
}

impl Needs {
    fn method(m: Method) -> Self {
        Self {
            mlm: m.needs_mlm(),
            translator: m.needs_translator(),
            encoder: false,
        }
    }

    fn encoder() -> Self {
        Self {
            encoder: true,
            ..Self::default()
        }
    }

    fn or(self, other: Self) -> Self {
        Self {
            mlm: self.mlm || other.mlm,
            encoder: self.encoder || other.encoder,
            translator: self.translator || other.translator,
        }
    }
}

/// Sorted distinct tokens, the mock masked LM's candidate pool.
fn vocabulary(d: &Dataset) -> Vec<String> {
    let mut words: Vec<String> = d
        .examples()
        .iter()
        .flat_map(|e| word_tokenize(&e.text).tokens().to_vec())
        .collect();
    words.sort();
    words.dedup();
    words
}

fn build_backends(s: &BackendSettings, needs: Needs, vocab: &[String]) -> Result<Backends, CliError> {
    let mut b = match s.kind {
        BackendKind::Mock => Backends {
            mlm: Some(Arc::new(VocabMlm::new(vocab.to_vec()))),
            encoder: Some(Arc::new(BagOfWordsEncoder)),
            translator: Some(Arc::new(SuffixTranslator::default())),
        },
        BackendKind::Http => {
            if !(needs.mlm || needs.encoder || needs.translator) {
                return Ok(Backends::default());
            }
            let cfg = BackendConfig {
                kind: BackendKind::Http,
                endpoint: s.shim_url.clone(),
                model_name: None,
                timeout: Duration::from_secs_f64(s.timeout_secs),
                retries: s.retries,
                max_inflight: s.max_inflight,
            };
            let client = Arc::new(HttpBackend::new(&cfg)?);
            client.health()?;
            Backends {
                mlm: Some(client.clone()),
                encoder: Some(client.clone()),
                translator: Some(client),
            }
        }
    };
    if !needs.mlm {
        b.mlm = None;
    }
    if !needs.encoder {
        b.encoder = None;
    }
    if !needs.translator {
        b.translator = None;
    }
    Ok(b)
}

fn encoder(b: &Backends) -> &dyn augtext::backends::SentenceEncoder {
    b.encoder.as_deref().expect("encoder requested")
}

/// Synthetic data gets its own family lexicon unless one is given.
fn lexical(s: &LexicalSettings, synthetic_classes: Option<usize>) -> Result<Lexical, CliError> {
    let synonyms = match (&s.lexicon, synthetic_classes) {
        (Some(p), _) => SynonymLexicon::load(p)?,
        (None, Some(c)) => SynthVocabulary::new(c).lexicon(),
        (None, None) => SynonymLexicon::embedded(),
    };
    let stopwords = match &s.stopwords {
        Some(p) => StopWords::load(p)?,
        None => StopWords::english(),
    };
    Ok(Lexical { synonyms, stopwords })
}

fn write(dir: &Path, name: &str, contents: &str, out: &mut Outcome) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::output(&path, e))?;
    out.outputs.push(name.to_string());
    Ok(())
}

/// Runs `job`, writing its outputs under `dir`.
pub fn execute(job: &Job, dir: &Path) -> Result<Outcome, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))?;
    match job {
        Job::Augment(j) => run_augment(j, dir),
        Job::Train(j) => run_train(j, dir),
        Job::Filter(j) => run_filter(j, dir),
        Job::Compare(j) => run_compare(j, dir),
        Job::Curve(j) => run_curve(j, dir),
        Job::Tsne(j) => run_tsne(j, dir),
        Job::Bench(j) => run_bench(j, dir),
        Job::Synth(j) => run_synth(j, dir),
    }
}

fn run_augment(j: &AugmentJob, dir: &Path) -> Result<Outcome, CliError> {
    let d = j.input.load()?;
    let backends = build_backends(&j.backend, Needs::method(j.method), &vocabulary(&d))?;
    let lex = lexical(&j.lexical, j.input.synthetic_classes())?;
    let report = augment_dataset(&d, j.method, &j.params, &backends, &lex)?;
    let mut out = Outcome {
        backends: backends.info(),
        ..Outcome::default()
    };
    let path = dir.join(&j.output);
    save_augmented(&path, &report.items)?;
    out.outputs.push(j.output.clone());
    println!(
        "{}: {} augmented examples from {} ({} skipped)",
        j.method,
        report.items.len(),
        d.len(),
        report.failures.len()
    );
    Ok(out)
}

fn run_train(j: &TrainJob, dir: &Path) -> Result<Outcome, CliError> {
    let d = j.input.load()?;
    d.ensure_multiclass()?;
    let backends = build_backends(&j.backend, Needs::encoder(), &[])?;
    let labels = LabelMap::new(d.label_set().iter().cloned());
    let pairs = encode_dataset(&d, encoder(&backends), &labels)?;
    let params = train(&pairs, labels.len(), &j.train)?;
    let path = dir.join(&j.output);
    SavedModel::new(labels.names().to_vec(), params.clone())
        .save(&path)
        .map_err(|e| CliError::output(&path, e))?;
    println!("trained on {} examples, {} classes", d.len(), labels.len());
    if let Some(test) = &j.test {
        let t = test.load()?;
        let acc = evaluate(&params, &encode_dataset(&t, encoder(&backends), &labels)?)?;
        println!("test accuracy {:.4} on {} examples", acc, t.len());
    }
    Ok(Outcome {
        outputs: vec![j.output.clone()],
        backends: backends.info(),
    })
}

fn run_filter(j: &FilterJob, dir: &Path) -> Result<Outcome, CliError> {
    let model = SavedModel::load(&j.model)?;
    let items = load_augmented(&j.augmented)?;
    let mut out = Outcome::default();
    let scored = if !items.is_empty() && items.iter().all(|i| i.loss.is_some()) {
        items
    } else {
        let backends = build_backends(&j.backend, Needs::encoder(), &[])?;
        out.backends = backends.info();
        let labels = LabelMap::new(model.labels.iter().cloned());
        score_augmented(&model.params, encoder(&backends), &labels, items)?
    };
    let kept = filter_lowest_loss(&scored, &j.filter)?;
    let path = dir.join(&j.output);
    save_augmented(&path, &kept)?;
    out.outputs.push(j.output.clone());
    println!("kept {}, dropped {}", kept.len(), scored.len() - kept.len());
    Ok(out)
}

fn run_compare(j: &CompareJob, dir: &Path) -> Result<Outcome, CliError> {
    let train = j.train.load()?;
    let test = j.test.load()?;
    let needs = j
        .config
        .arms
        .iter()
        .filter_map(|a| a.method())
        .fold(Needs::encoder(), |n, m| n.or(Needs::method(m)));
    let backends = build_backends(&j.backend, needs, &vocabulary(&train))?;
    let lex = lexical(&j.lexical, j.train.synthetic_classes())?;
    let table = compare_methods(&train, &test, &j.config, &backends, &lex)?;
    let mut out = Outcome {
        backends: backends.info(),
        ..Outcome::default()
    };
    write(dir, "compare.csv", &table.to_csv(), &mut out)?;
    let md = table.to_markdown();
    write(dir, "compare.md", &md, &mut out)?;
    print!("{md}");
    Ok(out)
}

fn run_curve(j: &CurveJob, dir: &Path) -> Result<Outcome, CliError> {
    let train = j.train.load()?;
    let test = j.test.load()?;
    let backends = build_backends(&j.backend, Needs::encoder(), &[])?;
    let results = size_curve(&train, &test, &j.config, encoder(&backends))?;
    let table = ResultTable {
        rows: results
            .into_iter()
            .map(|r| TableRow {
                config: r.config.clone(),
                result: Some(r),
                error: None,
            })
            .collect(),
    };
    let mut out = Outcome {
        backends: backends.info(),
        ..Outcome::default()
    };
    write(dir, "curve.csv", &table.to_csv(), &mut out)?;
    let md = table.to_markdown();
    write(dir, "curve.md", &md, &mut out)?;
    print!("{md}");
    Ok(out)
}

fn run_tsne(j: &TsneJob, dir: &Path) -> Result<Outcome, CliError> {
    let d = j.input.load()?;
    let needs = j.methods.iter().fold(Needs::encoder(), |n, &m| n.or(Needs::method(m)));
    let backends = build_backends(&j.backend, needs, &vocabulary(&d))?;
    let lex = lexical(&j.lexical, j.input.synthetic_classes())?;
    let mut out = Outcome {
        backends: backends.info(),
        ..Outcome::default()
    };
    let mut summary = String::from("method,n,displacement\n");
    for &m in &j.methods {
        let study = displacement_study(&d, m, j.n, &j.params, &backends, &lex, j.tsne.seed)?;
        let points = study.tsne(&j.tsne)?;
        write(dir, &format!("tsne_{m}.csv"), &tsne_csv(&points), &mut out)?;
        let title = format!("{m}: {} sentences and their augmentations", study.ids.len());
        write(dir, &format!("tsne_{m}.svg"), &tsne_svg(&points, &title), &mut out)?;
        let _ = writeln!(summary, "{m},{},{}", study.ids.len(), study.displacement);
        println!("{m}: displacement {:.4}", study.displacement);
    }
    write(dir, "displacement.csv", &summary, &mut out)?;
    Ok(out)
}

fn run_bench(j: &BenchJob, dir: &Path) -> Result<Outcome, CliError> {
    let d = j.input.load()?;
    let sample = sample_subset(&d, j.n, j.params.global_seed)?;
    let sentences: Vec<&str> = sample.examples().iter().map(|e| e.text.as_str()).collect();
    let needs = j.methods.iter().fold(Needs::default(), |n, &m| n.or(Needs::method(m)));
    let backends = build_backends(&j.backend, needs, &vocabulary(&d))?;
    let lex = lexical(&j.lexical, j.input.synthetic_classes())?;
    let mut csv = String::from("method,n_sentences,seconds,backend,model,param_count\n");
    for &m in &j.methods {
        let t = time_batch(m, &sentences, &j.params, &backends, &lex)?;
        let (kind, model, params) = match &t.backend {
            Some(b) => (
                format!("{:?}", b.kind).to_lowercase(),
                b.model.clone(),
                b.param_count.clone().unwrap_or_default(),
            ),
            None => ("none".into(), String::new(), String::new()),
        };
        let _ = writeln!(csv, "{m},{},{},{kind},{model},{params}", t.n_sentences, t.seconds);
        println!("{m}: {} sentences in {:.3} s", t.n_sentences, t.seconds);
    }
    let mut out = Outcome {
        backends: backends.info(),
        ..Outcome::default()
    };
    write(dir, "timing.csv", &csv, &mut out)?;
    Ok(out)
}

fn run_synth(j: &SynthJob, dir: &Path) -> Result<Outcome, CliError> {
    let d = generate(&j.config)?;
    let path = dir.join(&j.output);
    save_jsonl(&path, &d)?;
    let mut out = Outcome {
        outputs: vec![j.output.clone()],
        ..Outcome::default()
    };
    let lexicon = SynthVocabulary::new(j.config.num_classes).lexicon();
    let stem = Path::new(&j.output)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("synthetic");
    write(dir, &format!("{stem}.lexicon.tsv"), &lexicon.to_tsv(), &mut out)?;
    println!("{} examples, {} classes", d.len(), j.config.num_classes);
    Ok(out)
}
