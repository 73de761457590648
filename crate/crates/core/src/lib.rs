//! Common-noun metonymy resolution.
//!
//! The crate covers the whole batch workflow:
//!
//! * [`mining`]: grow a noun–verb pair lexicon with an LLM and pull candidate
//!   sentences out of dependency-parsed (CoNLL-U) corpora, sampled uniformly by noun.
//! * [`classify`]: Basic, chain-of-thought, and two-step category-routed
//!   chain-of-thought prompting, with self-consistency voting and a resumable
//!   batch runner.
//! * [`llm`]: chat-completion backends (HTTP, scripted, record/replay cache).
//! * [`eval`]: per-class precision/recall/F1, macro-F1, per-category breakdowns,
//!   Cohen's kappa and vote-count curves.
//! * [`data`]: the normalized JSONL schema shared by all of the above.

pub mod classify;
pub mod commands;
pub mod config;
pub mod data;
pub mod eval;
pub mod llm;
pub mod mining;

pub use data::{
    Dataset, Instance, MetonymyCategory, MetonymyLabel, Prediction, SemanticCategory, Strategy, VoteRecord,
};
