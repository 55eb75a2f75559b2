//! Incremental probing of language-model activations on garden-path sentences.
//!
//! The crate reads activation bundles exported from a language model and
//! measures, chunk by chunk, how the model resolves a temporarily ambiguous
//! sentence:
//!
//! * [`interpret`] tracks yes/no answer probabilities for the misinterpretation
//!   probe and scores end-of-sentence answers;
//! * [`probe`] trains a structural probe on gold dependency trees
//!   ([`treebank`]) and decodes minimum spanning trees from hidden states;
//! * [`attention`] computes per-head sensitivity to the correct attachment;
//! * [`surprisal`] averages token surprisal within each chunk;
//! * [`stats`] backs every comparison with t-tests;
//! * [`report`] renders deterministic CSV, Markdown and SVG artifacts.

pub mod attention;
pub mod bundle;
pub mod corpus;
pub mod error;
pub mod fixtures;
pub mod interpret;
pub mod probe;
pub mod report;
pub mod stats;
pub mod surprisal;
pub mod tensor;
pub mod treebank;

pub use bundle::{read_bundle, Bundle, BundleFilter, BundleManifest, PrefixActivations, Strictness};
pub use corpus::{load_corpus, GardenPathItem, GoldRoles, StimulusVariant, Variant, VerbClass};
pub use error::{Error, Result};
pub use probe::{decode_mst, DistanceMatrix, Edge, StructuralProbe, TrainConfig, Verdict};
pub use stats::StatsResult;
pub use treebank::{load_treebank, AnnotatedSentence, GoldTree};

/// Number of chunks every stimulus is split into.
pub const N_CHUNKS: usize = 5;
