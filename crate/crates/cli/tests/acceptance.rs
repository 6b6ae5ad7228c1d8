//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails or overruns its time budget.

use std::cell::RefCell;
use std::collections::{BTreeSet, VecDeque};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use augtext::augment::{
    augment_dataset, bert_replacement, edit_count, imf_augment, imf_tokens, random_deletion, random_insertion,
    random_swap, select_word, synonym_replacement, AugmentParams, Lexical, StopWords, SynonymLexicon,
};
use augtext::backends::{Backends, FnMlm, MaskPrediction, MaskQuery, RecordingMlm, VocabMlm, EMBEDDING_DIM};
use augtext::classifier::{
    evaluate, init_params, loss_and_gradient, mean_loss, train_with_history, MlpParams, TrainConfig,
};
use augtext::corpus::{Dataset, Example, Method};
use augtext::experiments::{displacement_study, mean_std, tsne_2d, TsneConfig};
use augtext::filter::{kept_count, select_lowest_loss};
use augtext::synth::{generate, SynthConfig, SynthVocabulary};
use augtext::{RngStream, TokenizedSentence};
use augtext_cli::manifest::without_timestamps;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use tempfile::TempDir;

type Check = fn() -> Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn main() {
    let criteria: [(&str, u64, Check); 8] = [
        ("iterative mask fill matches hand-traced queries", 1, mask_fill_traces),
        ("select_word frequencies pass chi-square", 5, select_word_chi_square),
        ("augmenter invariants hold on random inputs", 30, augmenter_invariants),
        ("lowest-loss filter keeps the right items", 5, filter_contract),
        ("classifier gradient, loss and fit", 60, classifier_numerics),
        (
            "swap leaves embeddings in place, imf moves them",
            10,
            displacement_separation,
        ),
        ("t-SNE separates clusters deterministically", 30, tsne_sanity),
        ("end-to-end compare is complete and replayable", 300, end_to_end_compare),
    ];
    // keep panics from interleaving with the report
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let result = match result {
            Ok(_) if elapsed > Duration::from_secs(budget) => Err("over time budget".to_string()),
            r => r,
        };
        let (status, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(e) => ("FAIL", e),
        };
        if result.is_err() {
            failed += 1;
        }
        println!(
            "{status} {}. {name} ({:.2}s, limit {budget}s): {detail}",
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn toks(words: &[&str]) -> Vec<String> {
    words.iter().map(|w| w.to_string()).collect()
}

fn sentence(words: &[&str]) -> TokenizedSentence {
    TokenizedSentence::new(toks(words)).unwrap()
}

fn pred(token: &str, score: f64) -> MaskPrediction {
    MaskPrediction::new(token, score)
}

/// Replays a fixed list of uniform draws through `Rng::random::<f64>`, which
/// keeps the top 53 bits of `next_u64`.
struct Scripted(VecDeque<f64>);

impl Scripted {
    fn new(us: &[f64]) -> Self {
        Self(us.iter().copied().collect())
    }
}

impl RngCore for Scripted {
    fn next_u64(&mut self) -> u64 {
        let u = self.0.pop_front().expect("scripted draws exhausted");
        ((u * (1u64 << 53) as f64) as u64) << 11
    }

    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

fn queries(rows: &[&[&str]]) -> Vec<Vec<String>> {
    rows.iter().map(|r| toks(r)).collect()
}

fn mask_fill_traces() -> Result<String, String> {
    let mut traces = 0;

    // unsorted candidates are ranked, cut to k = 3 and sampled by score
    let mlm = RecordingMlm::new(FnMlm::new(|_: &MaskQuery<'_>| {
        vec![
            pred("r", 0.2),
            pred("p", 0.5),
            pred("s", 0.01),
            pred("q", 0.3),
            pred("t", 0.005),
        ]
    }));
    let mut rng = Scripted::new(&[0.125, 0.75, 0.9375]);
    let out = imf_augment("the cat sat", &mlm, 3, &mut rng).map_err(|e| e.to_string())?;
    ensure!(out == "p q r", "weighted trace gave {out:?}");
    let calls = mlm.calls();
    let seen: Vec<_> = calls.iter().map(|c| c.tokens.clone()).collect();
    ensure!(
        seen == queries(&[
            &["<mask>", "cat", "sat"],
            &["p", "<mask>", "sat"],
            &["p", "q", "<mask>"]
        ]),
        "weighted trace queries {seen:?}"
    );
    ensure!(calls.iter().all(|c| c.k == 3), "k not passed through");
    ensure!(
        calls.iter().map(|c| c.mask_index).eq(0..3),
        "mask positions out of order"
    );
    traces += 1;

    // each answer depends on the left neighbour, so replacements propagate
    let chain = |q: &MaskQuery<'_>| {
        let token = match q.mask_index {
            0 => "A".to_string(),
            i => format!("{}1", q.tokens[i - 1]),
        };
        vec![pred(&token, 1.0)]
    };
    let mlm = RecordingMlm::new(FnMlm::new(chain));
    let out = imf_tokens(&sentence(&["x", "y", "z", "w"]), &mlm, 5, &mut RngStream::from_seed(1))
        .map_err(|e| e.to_string())?;
    ensure!(
        out.tokens() == toks(&["A", "A1", "A11", "A111"]),
        "propagation gave {:?}",
        out.tokens()
    );
    let seen: Vec<_> = mlm.calls().into_iter().map(|c| c.tokens).collect();
    ensure!(
        seen == queries(&[
            &["<mask>", "y", "z", "w"],
            &["A", "<mask>", "z", "w"],
            &["A", "A1", "<mask>", "w"],
            &["A", "A1", "A11", "<mask>"],
        ]),
        "propagation queries {seen:?}"
    );
    traces += 1;

    // the non-iterative variant always masks the original sentence
    let mlm = RecordingMlm::new(FnMlm::new(chain));
    let out = bert_replacement(
        &sentence(&["x", "y", "z", "w"]),
        1.0,
        &mlm,
        5,
        &mut RngStream::from_seed(1),
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        out.tokens() == toks(&["A", "x1", "y1", "z1"]),
        "non-iterative gave {:?}",
        out.tokens()
    );
    let seen: Vec<_> = mlm.calls().into_iter().map(|c| c.tokens).collect();
    ensure!(
        seen == queries(&[
            &["<mask>", "y", "z", "w"],
            &["x", "<mask>", "z", "w"],
            &["x", "y", "<mask>", "w"],
            &["x", "y", "z", "<mask>"],
        ]),
        "non-iterative queries {seen:?}"
    );
    traces += 1;

    // invalid candidates are dropped; nothing left means the original stays
    let mlm = RecordingMlm::new(FnMlm::new(|q: &MaskQuery<'_>| match q.original {
        "keep" => vec![pred("zero", 0.0), pred("two words", 3.0)],
        w => vec![
            pred("bad token", 5.0),
            pred("<mask>", 4.0),
            pred(&w.to_uppercase(), 1.0),
        ],
    }));
    let out = imf_augment("we keep going", &mlm, 2, &mut RngStream::from_seed(2)).map_err(|e| e.to_string())?;
    ensure!(out == "WE keep GOING", "fallback trace gave {out:?}");
    ensure!(
        mlm.calls().len() == 3,
        "fallback trace made {} queries",
        mlm.calls().len()
    );
    traces += 1;

    // left context holds replacements, right context is still original
    let mlm = RecordingMlm::new(FnMlm::new(|q: &MaskQuery<'_>| {
        let i = q.mask_index;
        let left = if i == 0 { "L" } else { q.tokens[i - 1].as_str() };
        let right = q.tokens.get(i + 1).map_or("R", String::as_str);
        vec![pred(&format!("{left}{right}"), 1.0)]
    }));
    let out =
        imf_tokens(&sentence(&["a", "b", "c"]), &mlm, 1, &mut RngStream::from_seed(3)).map_err(|e| e.to_string())?;
    ensure!(
        out.tokens() == toks(&["Lb", "Lbc", "LbcR"]),
        "context trace gave {:?}",
        out.tokens()
    );
    traces += 1;

    Ok(format!("{traces} traces match"))
}

fn select_word_chi_square() -> Result<String, String> {
    const DRAWS: usize = 10_000;
    let cases: [&[f64]; 3] = [&[0.6, 0.4], &[1.0, 1.0, 1.0, 1.0, 1.0], &[5.0, 3.0, 1.0, 1.0]];
    let mut worst = 1.0f64;
    for (c, scores) in cases.iter().enumerate() {
        let preds: Vec<MaskPrediction> = scores
            .iter()
            .enumerate()
            .map(|(i, &s)| pred(&format!("w{i}"), s))
            .collect();
        let mut rng = RngStream::derive(77, "chi_square", c as u64);
        let mut counts = vec![0usize; preds.len()];
        for _ in 0..DRAWS {
            let w = select_word(&preds, &mut rng);
            counts[preds.iter().position(|p| p.token == w).unwrap()] += 1;
        }
        let total: f64 = scores.iter().sum();
        let stat: f64 = counts
            .iter()
            .zip(scores.iter())
            .map(|(&o, &s)| {
                let e = DRAWS as f64 * s / total;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        let p = ChiSquared::new((scores.len() - 1) as f64).unwrap().sf(stat);
        ensure!(p > 0.001, "scores {scores:?}: counts {counts:?}, p = {p:.2e}");
        worst = worst.min(p);
    }
    Ok(format!("smallest p = {worst:.3}"))
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn run<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner(1000).run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

fn words_strategy(vocab: &[String]) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vocab.to_vec()), 1..25)
}

fn sorted(mut v: Vec<String>) -> Vec<String> {
    v.sort();
    v
}

fn is_subsequence(sub: &[String], full: &[String]) -> bool {
    let mut it = full.iter();
    sub.iter().all(|s| it.any(|f| f == s))
}

fn augmenter_invariants() -> Result<String, String> {
    let synth = SynthVocabulary::new(4);
    let vocab = synth.words();
    let lexical = Lexical {
        synonyms: synth.lexicon(),
        stopwords: StopWords::english(),
    };
    let mlm = VocabMlm::new(vocab.clone());
    let covering = SynonymLexicon::from_entries(vocab.iter().map(|w| (w.clone(), vec![format!("{w}x")])));
    let none = StopWords::none();
    let sentences = || (words_strategy(&vocab), 0.0..=1.0f64, any::<u64>());

    run("rs keeps the multiset", sentences(), |(t, alpha, seed)| {
        let out = random_swap(&t, alpha, &mut RngStream::from_seed(seed));
        prop_assert_eq!(sorted(out), sorted(t));
        Ok(())
    })?;
    run("imf keeps the length", sentences(), |(t, _, seed)| {
        let s = TokenizedSentence::new(t).unwrap();
        let out = imf_tokens(&s, &mlm, 5, &mut RngStream::from_seed(seed)).unwrap();
        prop_assert_eq!(out.len(), s.len());
        Ok(())
    })?;
    run("br keeps the length", sentences(), |(t, alpha, seed)| {
        let s = TokenizedSentence::new(t).unwrap();
        let out = bert_replacement(&s, alpha, &mlm, 5, &mut RngStream::from_seed(seed)).unwrap();
        prop_assert_eq!(out.len(), s.len());
        let changed = out.iter().zip(s.iter()).filter(|(a, b)| a != b).count();
        prop_assert!(changed <= edit_count(alpha, s.len()));
        Ok(())
    })?;
    run("sr keeps the length", sentences(), |(t, alpha, seed)| {
        let out = synonym_replacement(
            &t,
            alpha,
            &lexical.synonyms,
            &lexical.stopwords,
            &mut RngStream::from_seed(seed),
        );
        prop_assert_eq!(out.tokens.len(), t.len());
        Ok(())
    })?;
    run("ri adds one token per edit", sentences(), |(t, alpha, seed)| {
        let n = edit_count(alpha, t.len());
        let out = random_insertion(&t, alpha, &covering, &none, &mut RngStream::from_seed(seed));
        prop_assert_eq!(out.skipped, 0);
        prop_assert_eq!(out.tokens.len(), t.len() + n);
        let out = random_insertion(
            &t,
            alpha,
            &lexical.synonyms,
            &lexical.stopwords,
            &mut RngStream::from_seed(seed),
        );
        prop_assert_eq!(out.tokens.len() + out.skipped, t.len() + n);
        Ok(())
    })?;
    run("rd leaves a non-empty subsequence", sentences(), |(t, alpha, seed)| {
        let out = random_deletion(&t, alpha, &mut RngStream::from_seed(seed));
        prop_assert!(!out.is_empty());
        prop_assert!(is_subsequence(&out, &t));
        Ok(())
    })?;
    run("alpha = 0 is the identity", sentences(), |(t, _, seed)| {
        let rng = &mut RngStream::from_seed(seed);
        let s = TokenizedSentence::new(t.clone()).unwrap();
        prop_assert_eq!(&random_swap(&t, 0.0, rng), &t);
        prop_assert_eq!(&random_deletion(&t, 0.0, rng), &t);
        prop_assert_eq!(&random_insertion(&t, 0.0, &covering, &none, rng).tokens, &t);
        prop_assert_eq!(&synonym_replacement(&t, 0.0, &covering, &none, rng).tokens, &t);
        prop_assert_eq!(bert_replacement(&s, 0.0, &mlm, 5, rng).unwrap(), s);
        Ok(())
    })?;

    // deletion count: pool standardized lengths over random (L, p) and
    // compare with the exact mean and variance
    let mut rng = RngStream::from_seed(404);
    let (mut z_sum, mut cases) = (0.0, 0usize);
    for _ in 0..1000 {
        // length 1 is deterministic
        let len = rng.random_range(2..30usize);
        let p: f64 = rng.random_range(0.05..0.95);
        let t: Vec<String> = (0..len).map(|i| format!("t{i}")).collect();
        let l = len as f64;
        let mean = l * (1.0 - p) + p.powi(len as i32);
        let second = l * (1.0 - p) * p + (l * (1.0 - p)).powi(2) + p.powi(len as i32);
        let var = second - mean * mean;
        let got = random_deletion(&t, p, &mut rng).len() as f64;
        z_sum += (got - mean) / var.sqrt();
        cases += 1;
    }
    let z = z_sum / (cases as f64).sqrt();
    ensure!(z.abs() < 3.0, "rd length z-score {z:.2}");

    let labels = ["pos", "neg", "neutral"];
    let backends = Backends::mock(vocab.clone());
    let examples = prop::collection::vec((words_strategy(&vocab), 0..3usize), 1..6);
    let methods = prop::sample::select(Method::AUGMENTERS.to_vec());
    run(
        "dataset augmentation inherits labels and is seeded",
        (examples, methods, 1..4usize, any::<u64>()),
        |(rows, method, n_aug, seed)| {
            let examples: Vec<Example> = rows
                .iter()
                .enumerate()
                .map(|(i, (t, l))| Example {
                    id: i as u64,
                    text: t.join(" "),
                    label: labels[*l].to_string(),
                })
                .collect();
            let label_set: BTreeSet<String> = labels.iter().map(|l| l.to_string()).collect();
            let d = Dataset::with_labels("p", examples, label_set).unwrap();
            let params = AugmentParams {
                n_aug,
                global_seed: seed,
                ..AugmentParams::default()
            };
            let a = augment_dataset(&d, method, &params, &backends, &lexical).unwrap();
            let b = augment_dataset(&d, method, &params, &backends, &lexical).unwrap();
            prop_assert!(a.failures.is_empty());
            prop_assert_eq!(a.items.len(), d.len() * n_aug);
            prop_assert_eq!(&a.items, &b.items);
            for item in &a.items {
                prop_assert_eq!(&item.label, &d.get(item.orig_id).unwrap().label);
                prop_assert_eq!(item.method, method);
            }
            Ok(())
        },
    )?;
    Ok(format!("8 properties x 1000 cases, rd length z = {z:.2}"))
}

fn filter_contract() -> Result<String, String> {
    let losses = prop::collection::vec(0.0..10.0f64, 1..300);
    let checked = RefCell::new(0usize);
    run("filter", losses, |losses| {
        let n = losses.len();
        let mut prev: Option<Vec<usize>> = None;
        for f in [0.25, 0.5, 0.8, 1.0] {
            let kept = select_lowest_loss(&losses, f);
            prop_assert_eq!(kept.len(), ((f * n as f64).floor() as usize).max(1));
            prop_assert_eq!(kept.len(), kept_count(f, n));
            let kept_set: BTreeSet<usize> = kept.iter().copied().collect();
            let worst_kept = kept.iter().map(|&i| losses[i]).fold(f64::MIN, f64::max);
            let best_dropped = (0..n)
                .filter(|i| !kept_set.contains(i))
                .map(|i| losses[i])
                .fold(f64::MAX, f64::min);
            prop_assert!(worst_kept <= best_dropped);
            if let Some(p) = &prev {
                prop_assert!(p.iter().all(|i| kept_set.contains(i)), "smaller keep set not nested");
            }
            prev = Some(kept);
        }
        *checked.borrow_mut() += 1;
        Ok(())
    })?;
    Ok(format!("{} loss vectors, 4 fractions each", checked.into_inner()))
}

fn gaussian(rng: &mut RngStream, mean: f64, sd: f64) -> Vec<f64> {
    let normal = Normal::new(mean, sd).unwrap();
    (0..EMBEDDING_DIM).map(|_| normal.sample(rng)).collect()
}

fn classifier_numerics() -> Result<String, String> {
    const H: f64 = 1e-5;
    let rel_err = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
    let mut worst = 0.0f64;
    for (seed, (classes, batch_size)) in [(2usize, 1usize), (3, 4), (4, 2), (5, 8), (7, 3)]
        .into_iter()
        .enumerate()
    {
        let mut rng = RngStream::from_seed(1000 + seed as u64);
        let mut p = init_params(classes, seed as u64).map_err(|e| e.to_string())?;
        for v in p.values_mut() {
            *v += rng.random_range(-0.1..0.1);
        }
        let batch: Vec<(Vec<f64>, usize)> = (0..batch_size)
            .map(|_| (gaussian(&mut rng, 0.0, 0.5), rng.random_range(0..classes)))
            .collect();
        let (_, grad) = loss_and_gradient(&p, &batch);
        let analytic: Vec<f64> = grad.values().collect();
        let first = p.layers()[0].weights.len();
        let mut probes: Vec<usize> = (0..200).map(|_| rng.random_range(0..first)).collect();
        probes.extend(first..p.num_params());
        for i in probes {
            let orig = p.values().nth(i).unwrap();
            let mut shifted = |v: f64| {
                *p.values_mut().nth(i).unwrap() = v;
                mean_loss(&p, &batch)
            };
            let numeric = (shifted(orig + H) - shifted(orig - H)) / (2.0 * H);
            shifted(orig);
            worst = worst.max(rel_err(analytic[i], numeric));
        }
    }
    ensure!(worst < 1e-4, "gradient relative error {worst:.2e}");

    for c in [2usize, 3, 4, 8] {
        let p = MlpParams::zeros(c).map_err(|e| e.to_string())?;
        let batch = vec![(vec![0.7; EMBEDDING_DIM], 0usize), (vec![-0.2; EMBEDDING_DIM], c - 1)];
        let loss = mean_loss(&p, &batch);
        ensure!(
            (loss - (c as f64).ln()).abs() < 1e-4,
            "{c} classes: uniform loss {loss}"
        );
    }

    let mut rng = RngStream::from_seed(11);
    let blobs: Vec<(Vec<f64>, usize)> = (0..20)
        .map(|i| {
            let label = i % 2;
            (gaussian(&mut rng, if label == 0 { 0.5 } else { -0.5 }, 0.1), label)
        })
        .collect();
    let cfg = TrainConfig {
        epochs: 500,
        seed: 2,
        ..TrainConfig::default()
    };
    let fit = train_with_history(&blobs, 2, &cfg).map_err(|e| e.to_string())?;
    let acc = evaluate(&fit.params, &blobs).map_err(|e| e.to_string())?;
    ensure!(acc == 1.0, "separable blobs fit to {acc}");
    Ok(format!("max gradient error {worst:.1e}, blob accuracy {acc}"))
}

fn displacement_separation() -> Result<String, String> {
    let d = generate(&SynthConfig {
        n: 100,
        seed: 3,
        ..SynthConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let synth = SynthVocabulary::new(4);
    let backends = Backends::mock(synth.words());
    let lexical = Lexical {
        synonyms: synth.lexicon(),
        stopwords: StopWords::english(),
    };
    let params = AugmentParams::default();
    let study = |m| displacement_study(&d, m, 100, &params, &backends, &lexical, 1).map_err(|e| e.to_string());
    let rs = study(Method::Rs)?.displacement;
    let imf = study(Method::Imf)?.displacement;
    ensure!(rs == 0.0, "swap displacement {rs}");
    ensure!(imf > 0.1, "imf displacement {imf}");
    Ok(format!("rs {rs}, imf {imf:.3}"))
}

fn tsne_sanity() -> Result<String, String> {
    let mut rng = RngStream::from_seed(21);
    let unit = Normal::new(0.0, 1.0).unwrap();
    let noise = Normal::new(0.0, 0.1).unwrap();
    let mut points = Vec::new();
    let mut cluster = Vec::new();
    for c in 0..3 {
        let center: Vec<f64> = (0..EMBEDDING_DIM).map(|_| unit.sample(&mut rng)).collect();
        for _ in 0..10 {
            points.push(center.iter().map(|x| x + noise.sample(&mut rng)).collect::<Vec<f64>>());
            cluster.push(c);
        }
    }
    let cfg = TsneConfig {
        seed: 4,
        ..TsneConfig::default()
    };
    let y = tsne_2d(&points, &cfg).map_err(|e| e.to_string())?;
    ensure!(y.iter().flatten().all(|v| v.is_finite()), "non-finite coordinates");
    let dist = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
    let same = (0..y.len())
        .filter(|&i| {
            let nn = (0..y.len())
                .filter(|&j| j != i)
                .min_by(|&a, &b| dist(y[i], y[a]).total_cmp(&dist(y[i], y[b])))
                .unwrap();
            cluster[nn] == cluster[i]
        })
        .count();
    ensure!(same * 10 >= y.len() * 9, "{same}/{} same-cluster neighbours", y.len());
    ensure!(
        y == tsne_2d(&points, &cfg).map_err(|e| e.to_string())?,
        "second run differs"
    );
    Ok(format!("{same}/{} same-cluster neighbours", y.len()))
}

fn augtext(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_augtext"))
        .args(args)
        .current_dir(dir)
        .env_remove("AUGTEXT_SHIM_URL")
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        out.status.success(),
        "{args:?} exited with {}: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(())
}

fn end_to_end_compare() -> Result<String, String> {
    let t = TempDir::new().map_err(|e| e.to_string())?;
    let p = t.path();
    let args = [
        "compare",
        "--backend",
        "mock",
        "--synth-n",
        "200",
        "--train-size",
        "40",
        "--methods",
        "vanilla,real_sample,ri,rs,rd,sr,br,imf",
        "--n-aug",
        "1,4",
        "--keep",
        "0.8,1.0",
        "--runs",
        "3",
    ];
    augtext(p, &[&args[..], &["--out-dir", "a", "--jobs", "1"]].concat())?;
    augtext(p, &[&args[..], &["--out-dir", "b"]].concat())?;
    augtext(p, &["replay", "a/manifest.json", "--out-dir", "c"])?;

    let read = |dir: &str, f: &str| fs::read(p.join(dir).join(f)).map_err(|e| format!("{dir}/{f}: {e}"));
    for dir in ["b", "c"] {
        for f in ["compare.csv", "compare.md"] {
            ensure!(read("a", f)? == read(dir, f)?, "{dir}/{f} differs from the first run");
        }
    }
    let manifest = |d: &str| -> Result<serde_json::Value, String> {
        let text = String::from_utf8(read(d, "manifest.json")?).map_err(|e| e.to_string())?;
        without_timestamps(&text).map_err(|e| e.to_string())
    };
    ensure!(manifest("a")? == manifest("c")?, "replayed manifest differs");

    let csv = String::from_utf8(read("a", "compare.csv")?).map_err(|e| e.to_string())?;
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    ensure!(rows.len() == 27, "{} rows, expected 27", rows.len());
    for r in &rows {
        ensure!(r.len() == 10 && r[9].is_empty(), "row failed: {r:?}");
        let accs: Vec<f64> = r[8].split(';').map(|a| a.parse().unwrap()).collect();
        ensure!(accs.len() == 3, "row {r:?} has {} runs", accs.len());
        let (mean, std) = mean_std(&accs);
        let stored: (f64, f64) = (r[6].parse().unwrap(), r[7].parse().unwrap());
        ensure!(
            (mean - stored.0).abs() < 1e-12 && (std - stored.1).abs() < 1e-12,
            "row {r:?}: recomputed {mean}/{std}"
        );
    }
    Ok("27 rows, reruns and replay byte-identical".into())
}
