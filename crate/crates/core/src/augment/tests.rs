use std::collections::HashSet;
use std::sync::Arc;

use super::*;
use crate::backends::{
    EchoMlm, FnMlm, MaskPrediction, MaskQuery, RecordingMlm, SuffixTranslator, TableTranslator, MASK_TOKEN,
};
use crate::corpus::Example;

fn toks(s: &[&str]) -> Vec<String> {
    s.iter().map(|t| t.to_string()).collect()
}

fn rng(seed: u64) -> RngStream {
    RngStream::from_seed(seed)
}

fn prefix_mlm() -> FnMlm<impl Fn(&MaskQuery<'_>) -> Vec<MaskPrediction> + Send + Sync> {
    FnMlm::new(|q: &MaskQuery<'_>| vec![MaskPrediction::new(format!("X{}", q.original), 1.0)])
}

fn preds(scores: &[f64]) -> Vec<MaskPrediction> {
    scores
        .iter()
        .enumerate()
        .map(|(i, &s)| MaskPrediction::new(format!("w{i}"), s))
        .collect()
}

#[test]
fn select_single_candidate() {
    let p = preds(&[0.3]);
    let mut r = rng(1);
    for _ in 0..100 {
        assert_eq!(select_word(&p, &mut r), "w0");
    }
}

fn first_freq(scores: &[f64], draws: usize, seed: u64) -> f64 {
    let p = preds(scores);
    let mut r = rng(seed);
    let hits = (0..draws).filter(|_| select_word(&p, &mut r) == "w0").count();
    hits as f64 / draws as f64
}

#[test]
fn select_symmetric_scores() {
    let f = first_freq(&[2.0, 2.0], 10_000, 11);
    assert!((f - 0.5).abs() <= 0.02, "{f}");
}

#[test]
fn select_weighted_scores() {
    let f = first_freq(&[0.6, 0.4], 10_000, 12);
    assert!((0.57..=0.63).contains(&f), "{f}");
}

#[test]
fn imf_echo_is_identity() {
    let out = imf_augment("the quick fox", &EchoMlm, 1, &mut rng(0)).unwrap();
    assert_eq!(out, "the quick fox");
}

#[test]
fn imf_prefix_mock_trace() {
    let out = imf_augment("a b", &prefix_mlm(), 5, &mut rng(0)).unwrap();
    assert_eq!(out, "Xa Xb");
}

#[test]
fn imf_sees_previous_replacement() {
    // Position 1's only candidate spells out whatever sits at position 0.
    let mlm = RecordingMlm::new(FnMlm::new(|q: &MaskQuery<'_>| match q.mask_index {
        0 => vec![MaskPrediction::new("new", 1.0)],
        _ => vec![MaskPrediction::new(format!("after-{}", q.tokens[0]), 1.0)],
    }));
    let out = imf_augment("old word", &mlm, 5, &mut rng(0)).unwrap();
    assert_eq!(out, "new after-new");
    let calls = mlm.calls();
    assert_eq!(calls[0].tokens, toks(&[MASK_TOKEN, "word"]));
    assert_eq!(calls[1].tokens, toks(&["new", MASK_TOKEN]));
}

#[test]
fn imf_empty_input() {
    assert!(matches!(
        imf_augment("  ", &EchoMlm, 5, &mut rng(0)),
        Err(AugmentError::EmptyInput)
    ));
}

#[test]
fn imf_backend_error_carries_position() {
    struct Failing;
    impl MaskPredictor for Failing {
        fn predict(&self, q: &MaskQuery<'_>) -> Result<Vec<MaskPrediction>, BackendError> {
            if q.mask_index == 2 {
                Err(BackendError::Unavailable {
                    endpoint: "x".into(),
                    reason: "down".into(),
                })
            } else {
                Ok(vec![])
            }
        }
        fn info(&self) -> crate::backends::BackendInfo {
            crate::backends::BackendInfo::mock("failing")
        }
    }
    match imf_augment("a b c d", &Failing, 5, &mut rng(0)) {
        Err(AugmentError::Backend { position, .. }) => assert_eq!(position, Some(2)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn edit_count_rule() {
    assert_eq!(edit_count(0.0, 10), 0);
    assert_eq!(edit_count(0.1, 10), 1);
    assert_eq!(edit_count(0.1, 3), 1);
    assert_eq!(edit_count(0.1, 25), 3);
    assert_eq!(edit_count(0.1, 35), 4);
    assert_eq!(edit_count(1.0, 7), 7);
}

fn covering_lexicon(words: &[String]) -> SynonymLexicon {
    SynonymLexicon::from_entries(words.iter().map(|w| (w.clone(), vec![format!("{w}syn")])))
}

fn ten_words() -> Vec<String> {
    (0..10).map(|i| format!("word{i}")).collect()
}

#[test]
fn ri_adds_one_word() {
    let words = ten_words();
    let lex = covering_lexicon(&words);
    let out = random_insertion(&words, 0.1, &lex, &StopWords::english(), &mut rng(3));
    assert_eq!(out.tokens.len(), 11);
    assert_eq!(out.skipped, 0);
    assert!(out.tokens.iter().any(|t| t.ends_with("syn")));
}

#[test]
fn ri_alpha_zero_identity() {
    let words = ten_words();
    let lex = covering_lexicon(&words);
    let out = random_insertion(&words, 0.0, &lex, &StopWords::english(), &mut rng(3));
    assert_eq!(out.tokens, words);
}

#[test]
fn ri_empty_lexicon_skips() {
    let words = ten_words();
    let out = random_insertion(
        &words,
        0.1,
        &SynonymLexicon::empty(),
        &StopWords::english(),
        &mut rng(3),
    );
    assert_eq!(out.tokens, words);
    assert_eq!(out.skipped, 1);
}

#[test]
fn rs_two_tokens_swap() {
    assert_eq!(random_swap(&toks(&["a", "b"]), 0.1, &mut rng(5)), toks(&["b", "a"]));
}

#[test]
fn rs_single_token_identity() {
    assert_eq!(random_swap(&toks(&["a"]), 0.5, &mut rng(5)), toks(&["a"]));
}

#[test]
fn rd_alpha_zero_identity() {
    let words = ten_words();
    assert_eq!(random_deletion(&words, 0.0, &mut rng(1)), words);
}

#[test]
fn rd_alpha_one_keeps_one_uniformly() {
    let words = ten_words();
    let mut seen = HashSet::new();
    let mut r = rng(9);
    for _ in 0..500 {
        let out = random_deletion(&words, 1.0, &mut r);
        assert_eq!(out.len(), 1);
        seen.insert(out[0].clone());
    }
    assert_eq!(seen.len(), 10);
}

#[test]
fn rd_binomial_mean() {
    // Length ~ Binomial(100, 0.9); mean over 1000 trials has sd 0.095.
    let words: Vec<String> = (0..100).map(|i| format!("w{i}")).collect();
    let mut r = rng(21);
    let total: usize = (0..1000).map(|_| random_deletion(&words, 0.1, &mut r).len()).sum();
    let mean = total as f64 / 1000.0;
    assert!((89.0..=91.0).contains(&mean), "{mean}");
}

#[test]
fn sr_all_stopwords() {
    let words = toks(&["the", "and", "of"]);
    let lex = SynonymLexicon::from_entries([("the", vec!["teh"])]);
    let out = synonym_replacement(&words, 0.1, &lex, &StopWords::english(), &mut rng(1));
    assert_eq!(out.tokens, words);
    assert_eq!(out.skipped, 1);
}

#[test]
fn sr_exactly_one_replacement() {
    let words = ten_words();
    let lex = covering_lexicon(&words);
    let out = synonym_replacement(&words, 0.1, &lex, &StopWords::english(), &mut rng(4));
    assert_eq!(out.tokens.len(), 10);
    let changed = out.tokens.iter().zip(&words).filter(|(a, b)| a != b).count();
    assert_eq!(changed, 1);
}

#[test]
fn sr_quick_fox() {
    // eligible = {quick, fox}; fox is uncovered, so quick is the only choice.
    let lex = SynonymLexicon::from_entries([("quick", vec!["fast"])]);
    for seed in 0..20 {
        let out = synonym_replacement(
            &toks(&["the", "quick", "fox"]),
            0.1,
            &lex,
            &StopWords::english(),
            &mut rng(seed),
        );
        assert_eq!(out.tokens, toks(&["the", "fast", "fox"]));
    }
}

#[test]
fn br_echo_identity() {
    let s = word_tokenize("the quick brown fox jumps");
    assert_eq!(bert_replacement(&s, 0.5, &EchoMlm, 5, &mut rng(0)).unwrap(), s);
}

#[test]
fn br_changes_at_most_one_of_ten() {
    let s = TokenizedSentence::new(ten_words()).unwrap();
    let out = bert_replacement(&s, 0.1, &prefix_mlm(), 5, &mut rng(0)).unwrap();
    let changed = out.iter().zip(s.iter()).filter(|(a, b)| a != b).count();
    assert_eq!(changed, 1);
}

#[test]
fn br_does_not_propagate_context() {
    let mlm = RecordingMlm::new(prefix_mlm());
    let s = word_tokenize("a b");
    let out = bert_replacement(&s, 1.0, &mlm, 5, &mut rng(0)).unwrap();
    assert_eq!(out.to_string(), "Xa Xb");
    let calls = mlm.calls();
    assert_eq!(calls.len(), 2);
    assert_eq!(calls[0].tokens, toks(&[MASK_TOKEN, "b"]));
    assert_eq!(calls[1].tokens, toks(&["a", MASK_TOKEN]));
}

#[test]
fn bt_invertible_is_identity() {
    let t = SuffixTranslator::default();
    assert_eq!(back_translate("a b, c.", &t, "en", "tr").unwrap(), "a b, c.");
}

#[test]
fn bt_lossy_table() {
    let t = TableTranslator::new()
        .with("en", "tr", "hi", "selam")
        .with("tr", "en", "selam", "hello");
    assert_eq!(back_translate("hi", &t, "en", "tr").unwrap(), "hello");
}

#[test]
fn bt_empty_text() {
    assert!(matches!(
        back_translate("", &SuffixTranslator::default(), "en", "tr"),
        Err(AugmentError::EmptyInput)
    ));
}

fn dataset(n: usize) -> Dataset {
    let examples = (0..n)
        .map(|i| Example {
            id: i as u64,
            text: format!("the quick market {i} rose fast today , said analysts"),
            label: if i % 2 == 0 { "a" } else { "b" }.into(),
        })
        .collect();
    Dataset::new("d", examples).unwrap()
}

fn mock_backends() -> Backends {
    Backends {
        mlm: Some(Arc::new(prefix_mlm())),
        encoder: None,
        translator: Some(Arc::new(SuffixTranslator::default())),
    }
}

#[test]
fn dataset_count_contract() {
    let params = AugmentParams {
        n_aug: 4,
        ..AugmentParams::default()
    };
    let r = augment_dataset(
        &dataset(10),
        Method::Imf,
        &params,
        &mock_backends(),
        &Lexical::default(),
    )
    .unwrap();
    assert_eq!(r.items.len(), 40);
    assert_eq!(r.first_replicas(1).len(), 10);
}

#[test]
fn dataset_rs_preserves_multiset_and_label() {
    let d = dataset(10);
    let params = AugmentParams {
        n_aug: 3,
        alpha: 0.3,
        ..AugmentParams::default()
    };
    let r = augment_dataset(&d, Method::Rs, &params, &Backends::default(), &Lexical::default()).unwrap();
    for item in &r.items {
        let src = d.get(item.orig_id).unwrap();
        let mut a = word_tokenize(&item.text).into_tokens();
        let mut b = word_tokenize(&src.text).into_tokens();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert_eq!(item.label, src.label);
        assert_eq!(item.method, Method::Rs);
    }
}

#[test]
fn dataset_deterministic_and_replica_prefix_stable() {
    let d = dataset(12);
    let lex = Lexical {
        synonyms: SynonymLexicon::embedded(),
        stopwords: StopWords::english(),
    };
    let backends = Backends::mock(vec!["quack".into(), "quick".into(), "quiet".into()]);
    for method in Method::AUGMENTERS {
        let p4 = AugmentParams {
            n_aug: 4,
            global_seed: 99,
            ..AugmentParams::default()
        };
        let p1 = AugmentParams { n_aug: 1, ..p4.clone() };
        let a = augment_dataset(&d, method, &p4, &backends, &lex).unwrap();
        let b = augment_dataset(&d, method, &p4, &backends, &lex).unwrap();
        assert_eq!(a.items, b.items, "{method}");
        let one = augment_dataset(&d, method, &p1, &backends, &lex).unwrap();
        assert_eq!(a.first_replicas(1), one.items, "{method}");
    }
}

#[test]
fn dataset_missing_backend() {
    let err = augment_dataset(
        &dataset(2),
        Method::Imf,
        &AugmentParams::default(),
        &Backends::default(),
        &Lexical::default(),
    )
    .unwrap_err();
    assert!(matches!(err, AugmentError::MissingBackend { .. }));
    let err = augment_dataset(
        &dataset(2),
        Method::Bt,
        &AugmentParams::default(),
        &Backends::default(),
        &Lexical::default(),
    )
    .unwrap_err();
    assert!(matches!(err, AugmentError::MissingBackend { .. }));
}

#[test]
fn dataset_real_is_not_a_method() {
    assert!(matches!(
        augment_dataset(
            &dataset(2),
            Method::Real,
            &AugmentParams::default(),
            &Backends::default(),
            &Lexical::default()
        ),
        Err(AugmentError::UnsupportedMethod(Method::Real))
    ));
}

#[test]
fn dataset_bt_copies() {
    let params = AugmentParams {
        n_aug: 3,
        ..AugmentParams::default()
    };
    let d = dataset(3);
    let r = augment_dataset(&d, Method::Bt, &params, &mock_backends(), &Lexical::default()).unwrap();
    assert_eq!(r.items.len(), 9);
    // identity up to whitespace normalization
    assert!(r
        .items
        .iter()
        .all(|i| i.text == word_tokenize(&d.get(i.orig_id).unwrap().text).to_string()));
}

struct FailOn(HashSet<String>);

impl MaskPredictor for FailOn {
    fn predict(&self, q: &MaskQuery<'_>) -> Result<Vec<MaskPrediction>, BackendError> {
        if self.0.contains(q.original) {
            Err(BackendError::MalformedResponse("boom".into()))
        } else {
            Ok(vec![])
        }
    }
    fn info(&self) -> crate::backends::BackendInfo {
        crate::backends::BackendInfo::mock("fail-on")
    }
}

fn numbered(n: usize) -> Dataset {
    let examples = (0..n)
        .map(|i| Example {
            id: i as u64,
            text: format!("t{i}"),
            label: if i % 2 == 0 { "a" } else { "b" }.into(),
        })
        .collect();
    Dataset::new("d", examples).unwrap()
}

#[test]
fn dataset_failure_threshold() {
    let params = AugmentParams::default();
    let lex = Lexical::default();

    // 1 of 200 fails: 0.5%, tolerated.
    let backends = Backends {
        mlm: Some(Arc::new(FailOn(["t7".to_string()].into()))),
        ..Backends::default()
    };
    let r = augment_dataset(&numbered(200), Method::Imf, &params, &backends, &lex).unwrap();
    assert_eq!(r.items.len(), 199);
    assert_eq!(r.failures.len(), 1);
    assert_eq!(r.failures[0].id, 7);

    // 3 of 200 fails: 1.5%, the run fails.
    let backends = Backends {
        mlm: Some(Arc::new(FailOn(
            ["t1", "t2", "t3"].iter().map(|s| s.to_string()).collect(),
        ))),
        ..Backends::default()
    };
    assert!(matches!(
        augment_dataset(&numbered(200), Method::Imf, &params, &backends, &lex),
        Err(AugmentError::TooManyFailures {
            failed: 3,
            total: 200,
            backend: true,
            ..
        })
    ));
}

#[test]
fn params_validation() {
    let bad = [
        AugmentParams {
            k: 0,
            ..AugmentParams::default()
        },
        AugmentParams {
            alpha: 1.5,
            ..AugmentParams::default()
        },
        AugmentParams {
            n_aug: 0,
            ..AugmentParams::default()
        },
        AugmentParams {
            pivot_lang: "en".into(),
            ..AugmentParams::default()
        },
    ];
    for p in bad {
        assert!(p.validate().is_err(), "{p:?}");
    }
}
