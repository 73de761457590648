//! Candidate mining: grow a noun–verb lexicon from seed pairs, scan parsed
//! corpora for sentences where a lexicon noun and verb share a dependency edge,
//! and sample the result evenly across nouns.

pub mod conllu;
mod lexicon;
mod sample;
mod scan;

use std::path::PathBuf;

use thiserror::Error;

use crate::llm::LlmError;

pub use lexicon::{
    augment_nouns, augment_verbs, build_pair_lexicon, read_seeds, substitute_noun, AugmentOptions, Augmented,
    LexiconStats, PairLexicon, PairProvenance, SeedPair, NOUN_PROMPT, VERB_PROMPT,
};
pub use sample::{sample_per_category, sample_uniform};
pub use scan::{
    candidates_in_sentence, export_candidates, read_candidates, scan_conllu, scan_reader, write_candidates,
    CandidateSentence, LexiconIndex, ScanStats,
};

#[derive(Debug, Error)]
pub enum MiningError {
    #[error("seed <{noun}, {verb}>: {source}")]
    Backend {
        noun: String,
        verb: String,
        #[source]
        source: LlmError,
    },
    #[error("invalid seed on line {line}: {message}")]
    InvalidSeed { line: usize, message: String },
    #[error("no seed pairs given")]
    NoSeeds,
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error(transparent)]
    Write(#[from] crate::data::DataError),
}

impl MiningError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MiningError::Io {
            path: path.into(),
            source,
        }
    }
}
