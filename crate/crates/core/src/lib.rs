//! Text augmentation with iterative mask filling, six baseline augmenters,
//! loss-based filtering of augmented examples, a small from-scratch MLP
//! classifier, and the drivers that benchmark them against each other.
//!
//! The crate never runs neural models in-process. Masked-LM predictions,
//! sentence embeddings and translations come from a [`backends`]
//! implementation: deterministic mocks for hermetic runs, or an HTTP client
//! for the model shim.

pub mod augment;
pub mod backends;
pub mod classifier;
pub mod corpus;
pub mod experiments;
pub mod filter;
pub mod rng;
pub mod synth;
pub mod tokenize;

pub use augment::{AugmentParams, Augmenter, Lexical, StopWords, SynonymLexicon};
pub use backends::{Backends, EmbeddingVector, MaskPrediction};
pub use classifier::{LabelMap, MlpParams, TrainConfig};
pub use corpus::{AugmentedExample, Dataset, Example, Method};
pub use filter::FilterConfig;
pub use rng::RngStream;
pub use tokenize::{join, word_tokenize, TokenizedSentence};
