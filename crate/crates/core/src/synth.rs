//! Synthetic topic-classification corpora for hermetic runs.
//!
//! Each topic owns a handful of word families; a family is a three-letter
//! stem plus a few endings (`kem`, `kema`, `kemor`, ...). Sentences mix
//! topic words with shared filler and function words. Because the mock
//! masked LM proposes replacements from the same three-letter family, and
//! the generated lexicon lists family members as synonyms, substitution
//! augmenters mostly keep a sentence on topic.

use serde::{Deserialize, Serialize};

use crate::augment::SynonymLexicon;
use crate::corpus::{CorpusError, Dataset, Example};
use crate::rng::RngStream;
use rand::Rng;

pub const TOPIC_NAMES: [&str; 8] = [
    "world", "sports", "business", "science", "health", "arts", "travel", "food",
];

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";
const ENDINGS: [&str; 4] = ["", "a", "en", "or"];
const FAMILIES_PER_TOPIC: usize = 6;
const SHARED_FAMILIES: usize = 8;
const FUNCTION_WORDS: [&str; 8] = ["the", "a", "of", "in", "and", "to", "on", "with"];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub name: String,
    pub num_classes: usize,
    pub n: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability that a content word comes from the sentence's topic.
    pub topic_share: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            num_classes: 4,
            n: 200,
            min_len: 6,
            max_len: 12,
            topic_share: 0.6,
            seed: 0,
        }
    }
}

/// The fixed word inventory for a given number of topics.
#[derive(Debug, Clone)]
pub struct SynthVocabulary {
    topics: Vec<Vec<Vec<String>>>,
    shared: Vec<Vec<String>>,
}

/// Distinct consonant-vowel-consonant stems, spread over the alphabet.
fn stems(count: usize) -> Vec<String> {
    let total = CONSONANTS.len() * VOWELS.len() * CONSONANTS.len();
    // stride coprime with the table size visits every stem once
    let stride = 97;
    (0..count)
        .map(|i| {
            let k = (i * stride) % total;
            let c1 = CONSONANTS[k / (VOWELS.len() * CONSONANTS.len())];
            let v = VOWELS[(k / CONSONANTS.len()) % VOWELS.len()];
            let c2 = CONSONANTS[k % CONSONANTS.len()];
            String::from_utf8(vec![c1, v, c2]).expect("ascii")
        })
        .collect()
}

fn family(stem: &str) -> Vec<String> {
    ENDINGS.iter().map(|e| format!("{stem}{e}")).collect()
}

impl SynthVocabulary {
    pub fn new(num_classes: usize) -> Self {
        let stems = stems(num_classes * FAMILIES_PER_TOPIC + SHARED_FAMILIES);
        let topics = (0..num_classes)
            .map(|t| {
                stems[t * FAMILIES_PER_TOPIC..(t + 1) * FAMILIES_PER_TOPIC]
                    .iter()
                    .map(|s| family(s))
                    .collect()
            })
            .collect();
        let shared = stems[num_classes * FAMILIES_PER_TOPIC..]
            .iter()
            .map(|s| family(s))
            .collect();
        Self { topics, shared }
    }

    /// Every word, sorted, including function words.
    pub fn words(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .topics
            .iter()
            .flatten()
            .chain(&self.shared)
            .flatten()
            .cloned()
            .chain(FUNCTION_WORDS.iter().map(|w| w.to_string()))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Topic words of class `t`.
    pub fn topic_words(&self, t: usize) -> Vec<String> {
        self.topics[t].iter().flatten().cloned().collect()
    }

    /// Each content word maps to the other members of its family.
    pub fn lexicon(&self) -> SynonymLexicon {
        let families = self.topics.iter().flatten().chain(&self.shared);
        SynonymLexicon::from_entries(families.flat_map(|fam| {
            fam.iter()
                .map(|w| (w.clone(), fam.iter().filter(|o| *o != w).cloned().collect::<Vec<_>>()))
                .collect::<Vec<_>>()
        }))
    }

    fn pick<'a, R: Rng>(families: &'a [Vec<String>], rng: &mut R) -> &'a str {
        let fam = &families[rng.random_range(0..families.len())];
        &fam[rng.random_range(0..fam.len())]
    }

    fn sentence<R: Rng>(&self, topic: usize, cfg: &SynthConfig, rng: &mut R) -> String {
        let len = rng.random_range(cfg.min_len..=cfg.max_len);
        let mut words = Vec::with_capacity(len);
        for i in 0..len {
            let w = if i % 3 == 1 {
                FUNCTION_WORDS[rng.random_range(0..FUNCTION_WORDS.len())]
            } else if rng.random::<f64>() < cfg.topic_share {
                Self::pick(&self.topics[topic], rng)
            } else {
                Self::pick(&self.shared, rng)
            };
            words.push(w);
        }
        words.join(" ")
    }
}

/// Generates a balanced labeled corpus; example `i` has topic `i mod C`.
pub fn generate(cfg: &SynthConfig) -> Result<Dataset, CorpusError> {
    if !(2..=TOPIC_NAMES.len()).contains(&cfg.num_classes) {
        return Err(CorpusError::Invalid(format!(
            "num_classes must be in 2..={}, got {}",
            TOPIC_NAMES.len(),
            cfg.num_classes
        )));
    }
    if cfg.min_len == 0 || cfg.min_len > cfg.max_len {
        return Err(CorpusError::Invalid(
            "sentence lengths must satisfy 1 <= min_len <= max_len".into(),
        ));
    }
    if !(0.0..=1.0).contains(&cfg.topic_share) {
        return Err(CorpusError::Invalid("topic_share must be in [0, 1]".into()));
    }
    let vocab = SynthVocabulary::new(cfg.num_classes);
    let mut rng = RngStream::derive(cfg.seed, "synth", 0);
    let examples = (0..cfg.n)
        .map(|i| {
            let topic = i % cfg.num_classes;
            Example {
                id: i as u64,
                text: vocab.sentence(topic, cfg, &mut rng),
                label: TOPIC_NAMES[topic].to_string(),
            }
        })
        .collect();
    Dataset::new(cfg.name.clone(), examples)
}
