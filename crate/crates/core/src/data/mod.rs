//! Instances, labels and predictions in the normalized schema.

mod io;
mod stats;
pub mod tokens;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use io::{
    load_dataset, load_dataset_lenient, parse_dataset, read_predictions, write_dataset, write_predictions, DataError,
    RowError, RowErrorKind,
};
pub(crate) use io::{prediction_from_json, prediction_to_json, write_atomic};
pub use stats::{dataset_stats, CategoryCounts, DatasetStats, CONMEC_DISTRIBUTION};
pub use tokens::{LocateError, TargetSpan};

/// Gold or predicted label for a target noun.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetonymyLabel {
    Metonymic,
    NonMetonymic,
}

impl MetonymyLabel {
    pub fn flip(self) -> Self {
        match self {
            MetonymyLabel::Metonymic => MetonymyLabel::NonMetonymic,
            MetonymyLabel::NonMetonymic => MetonymyLabel::Metonymic,
        }
    }

    /// Spelling used in dataset files.
    pub fn dataset_str(self) -> &'static str {
        match self {
            MetonymyLabel::Metonymic => "metonymic",
            MetonymyLabel::NonMetonymic => "non-metonymic",
        }
    }

    /// Spelling used in prediction files (negatives are "literal").
    pub fn prediction_str(self) -> &'static str {
        match self {
            MetonymyLabel::Metonymic => "metonymic",
            MetonymyLabel::NonMetonymic => "literal",
        }
    }
}

impl FromStr for MetonymyLabel {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "metonymic" | "met" => Ok(MetonymyLabel::Metonymic),
            "non-metonymic" | "nonmetonymic" | "non_metonymic" | "literal" => Ok(MetonymyLabel::NonMetonymic),
            _ => Err(ParseEnumError::new("label", s)),
        }
    }
}

impl fmt::Display for MetonymyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dataset_str())
    }
}

/// The six metonymy types a dataset instance can be bucketed under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetonymyCategory {
    Container,
    Producer,
    Product,
    Location,
    Causer,
    Possessed,
}

impl MetonymyCategory {
    pub const ALL: [MetonymyCategory; 6] = [
        MetonymyCategory::Container,
        MetonymyCategory::Producer,
        MetonymyCategory::Product,
        MetonymyCategory::Location,
        MetonymyCategory::Causer,
        MetonymyCategory::Possessed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetonymyCategory::Container => "container",
            MetonymyCategory::Producer => "producer",
            MetonymyCategory::Product => "product",
            MetonymyCategory::Location => "location",
            MetonymyCategory::Causer => "causer",
            MetonymyCategory::Possessed => "possessed",
        }
    }
}

impl FromStr for MetonymyCategory {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        // Accept the long type names too, e.g. "container-for-content".
        let head = lower.split(['-', '_', ' ']).next().unwrap_or("");
        MetonymyCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == head)
            .ok_or_else(|| ParseEnumError::new("category", s))
    }
}

impl fmt::Display for MetonymyCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The five-way routing label predicted by the categorization step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SemanticCategory {
    Container,
    Producer,
    Product,
    Location,
    General,
}

impl SemanticCategory {
    pub const ALL: [SemanticCategory; 5] = [
        SemanticCategory::Container,
        SemanticCategory::Producer,
        SemanticCategory::Product,
        SemanticCategory::Location,
        SemanticCategory::General,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SemanticCategory::Container => "container",
            SemanticCategory::Producer => "producer",
            SemanticCategory::Product => "product",
            SemanticCategory::Location => "location",
            SemanticCategory::General => "general",
        }
    }
}

impl From<MetonymyCategory> for SemanticCategory {
    /// Causer and possessed targets have no dedicated semantic type.
    fn from(c: MetonymyCategory) -> Self {
        match c {
            MetonymyCategory::Container => SemanticCategory::Container,
            MetonymyCategory::Producer => SemanticCategory::Producer,
            MetonymyCategory::Product => SemanticCategory::Product,
            MetonymyCategory::Location => SemanticCategory::Location,
            MetonymyCategory::Causer | MetonymyCategory::Possessed => SemanticCategory::General,
        }
    }
}

impl FromStr for SemanticCategory {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        SemanticCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == lower)
            .ok_or_else(|| ParseEnumError::new("semantic category", s))
    }
}

impl fmt::Display for SemanticCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Prompting strategy that produced a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Basic,
    Cot,
    Cot2s,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Basic, Strategy::Cot, Strategy::Cot2s];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Basic => "basic",
            Strategy::Cot => "cot",
            Strategy::Cot2s => "cot2s",
        }
    }
}

impl FromStr for Strategy {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "basic" => Ok(Strategy::Basic),
            "cot" => Ok(Strategy::Cot),
            "cot2s" | "cot-2s" => Ok(Strategy::Cot2s),
            _ => Err(ParseEnumError::new("strategy", s)),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

macro_rules! serialize_as_str {
    ($($t:ty => $f:ident),*) => {$(
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.$f())
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    )*};
}

serialize_as_str!(
    MetonymyLabel => dataset_str,
    MetonymyCategory => as_str,
    SemanticCategory => as_str,
    Strategy => as_str
);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid {kind}: {value:?}")]
pub struct ParseEnumError {
    pub kind: &'static str,
    pub value: String,
}

impl ParseEnumError {
    fn new(kind: &'static str, value: &str) -> Self {
        ParseEnumError {
            kind,
            value: value.to_string(),
        }
    }
}

/// One sentence with one target noun.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub id: String,
    pub sentence: String,
    pub target: String,
    /// Which case-insensitive whole-token occurrence of `target` is meant.
    pub target_occurrence: usize,
    pub category: Option<MetonymyCategory>,
    pub gold: Option<MetonymyLabel>,
    pub context_before: Option<String>,
    pub context_after: Option<String>,
}

impl Instance {
    pub fn new(id: impl Into<String>, sentence: impl Into<String>, target: impl Into<String>) -> Self {
        Instance {
            id: id.into(),
            sentence: sentence.into(),
            target: target.into(),
            target_occurrence: 0,
            category: None,
            gold: None,
            context_before: None,
            context_after: None,
        }
    }

    pub fn with_gold(mut self, gold: MetonymyLabel) -> Self {
        self.gold = Some(gold);
        self
    }

    pub fn with_category(mut self, category: MetonymyCategory) -> Self {
        self.category = Some(category);
        self
    }

    pub fn with_occurrence(mut self, occurrence: usize) -> Self {
        self.target_occurrence = occurrence;
        self
    }

    pub fn with_context(mut self, before: Option<String>, after: Option<String>) -> Self {
        self.context_before = before;
        self.context_after = after;
        self
    }

    /// Character span of the annotated target occurrence.
    pub fn locate_target(&self) -> Result<TargetSpan, LocateError> {
        tokens::locate(&self.sentence, &self.target, self.target_occurrence)
    }
}

/// Instances in file order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    pub name: String,
    pub instances: Vec<Instance>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, instances: Vec<Instance>) -> Self {
        Dataset {
            name: name.into(),
            instances,
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Instance> {
        self.instances.iter().find(|i| i.id == id)
    }
}

/// A single sampled answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteRecord {
    pub label: MetonymyLabel,
    /// Routing category from the categorization step (CoT-2S only).
    pub category: Option<SemanticCategory>,
    /// True when the label could not be parsed and the default was used.
    pub parse_failed: bool,
    pub trace_ref: Option<String>,
}

impl VoteRecord {
    pub fn new(label: MetonymyLabel) -> Self {
        VoteRecord {
            label,
            category: None,
            parse_failed: false,
            trace_ref: None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PredictionError {
    #[error("prediction {0}: no votes")]
    NoVotes(String),
    #[error("prediction {id}: even vote count {count}")]
    EvenVotes { id: String, count: usize },
    #[error("prediction {0}: final label disagrees with the vote majority")]
    FinalMismatch(String),
    #[error("prediction {id}: parse_failures is {stored}, votes say {counted}")]
    ParseFailureMismatch { id: String, stored: usize, counted: usize },
    #[error("prediction {0}: cot2s vote without a category")]
    MissingCategory(String),
}

/// Final per-instance output of a strategy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub id: String,
    pub strategy: Strategy,
    pub votes: Vec<VoteRecord>,
    pub final_label: MetonymyLabel,
    pub predicted_category: Option<SemanticCategory>,
    pub parse_failures: usize,
}

impl Prediction {
    /// Builds a prediction from an odd, non-empty list of votes.
    pub fn from_votes(
        id: impl Into<String>,
        strategy: Strategy,
        votes: Vec<VoteRecord>,
    ) -> Result<Self, PredictionError> {
        let id = id.into();
        let labels: Vec<MetonymyLabel> = votes.iter().map(|v| v.label).collect();
        let final_label = majority(&labels).ok_or_else(|| {
            if votes.is_empty() {
                PredictionError::NoVotes(id.clone())
            } else {
                PredictionError::EvenVotes {
                    id: id.clone(),
                    count: votes.len(),
                }
            }
        })?;
        let predicted_category = modal_category(&votes);
        let parse_failures = votes.iter().filter(|v| v.parse_failed).count();
        let p = Prediction {
            id,
            strategy,
            votes,
            final_label,
            predicted_category,
            parse_failures,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PredictionError> {
        let id = || self.id.clone();
        if self.votes.is_empty() {
            return Err(PredictionError::NoVotes(id()));
        }
        if self.votes.len().is_multiple_of(2) {
            return Err(PredictionError::EvenVotes {
                id: id(),
                count: self.votes.len(),
            });
        }
        let labels: Vec<MetonymyLabel> = self.votes.iter().map(|v| v.label).collect();
        if majority(&labels) != Some(self.final_label) {
            return Err(PredictionError::FinalMismatch(id()));
        }
        let counted = self.votes.iter().filter(|v| v.parse_failed).count();
        if counted != self.parse_failures {
            return Err(PredictionError::ParseFailureMismatch {
                id: id(),
                stored: self.parse_failures,
                counted,
            });
        }
        if self.strategy == Strategy::Cot2s && self.votes.iter().any(|v| v.category.is_none()) {
            return Err(PredictionError::MissingCategory(id()));
        }
        Ok(())
    }
}

/// Strict majority over an odd number of labels; `None` for empty or even input.
pub fn majority(labels: &[MetonymyLabel]) -> Option<MetonymyLabel> {
    if labels.is_empty() || labels.len().is_multiple_of(2) {
        return None;
    }
    let met = labels.iter().filter(|&&l| l == MetonymyLabel::Metonymic).count();
    Some(if 2 * met > labels.len() {
        MetonymyLabel::Metonymic
    } else {
        MetonymyLabel::NonMetonymic
    })
}

// Most frequent category; ties go to the one seen first.
fn modal_category(votes: &[VoteRecord]) -> Option<SemanticCategory> {
    let mut counts: Vec<(SemanticCategory, usize)> = Vec::new();
    for c in votes.iter().filter_map(|v| v.category) {
        match counts.iter_mut().find(|(k, _)| *k == c) {
            Some((_, n)) => *n += 1,
            None => counts.push((c, 1)),
        }
    }
    let best = counts.iter().map(|(_, n)| *n).max()?;
    counts.into_iter().find(|(_, n)| *n == best).map(|(c, _)| c)
}
