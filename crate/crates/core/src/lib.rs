//! advish-core: an adversarial robustness harness for voice-phishing
//! transcript classifiers.
//!
//! The pipeline runs in five phases: build adversarial prompts, generate
//! rewritten transcripts through LLM backends, preprocess and vectorize text
//! with TF-IDF, evaluate a suite of from-scratch classifiers, and quantify
//! both the accuracy degradation (exact Wilcoxon, tie-corrected Friedman,
//! Nemenyi post-hoc) and the semantic preservation of the rewrites (greedy
//! embedding matching).

pub mod attack;
pub mod classify;
pub mod corpus;
pub mod metrics;
pub mod pipeline;
pub mod seed;
pub mod semsim;
pub mod stats;
pub mod tfidf;

pub use corpus::{Corpus, Label, Transcript};
pub use tfidf::{SparseFeatureVector, TfidfModel};
