use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    tokens, Dataset, Instance, MetonymyCategory, MetonymyLabel, Prediction, PredictionError, SemanticCategory,
    Strategy, VoteRecord,
};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{} row(s) rejected, first: {}", .0.len(), .0[0])]
    Rows(Vec<RowError>),
    #[error("line {line}: {message}")]
    MalformedPrediction { line: usize, message: String },
    #[error(transparent)]
    Prediction(#[from] PredictionError),
}

impl DataError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// A dataset row that failed validation, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct RowError {
    pub line: usize,
    pub kind: RowErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RowErrorKind {
    #[error("malformed row: {0}")]
    Malformed(String),
    #[error("target {target:?} not found in sentence (occurrence {occurrence}, found {found})")]
    TargetNotFound {
        target: String,
        occurrence: usize,
        found: usize,
    },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    id: String,
    sentence: String,
    target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_index: Option<usize>,
    #[serde(default)]
    category: Option<String>,
    #[serde(default)]
    label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    context_before: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    context_after: Option<String>,
}

impl RawInstance {
    fn from_instance(i: &Instance) -> Self {
        RawInstance {
            id: i.id.clone(),
            sentence: i.sentence.clone(),
            target: i.target.clone(),
            target_index: (i.target_occurrence != 0).then_some(i.target_occurrence),
            category: i.category.map(|c| c.as_str().to_string()),
            label: i.gold.map(|l| l.dataset_str().to_string()),
            context_before: i.context_before.clone(),
            context_after: i.context_after.clone(),
        }
    }

    fn into_instance(self) -> Result<Instance, RowErrorKind> {
        let category = self
            .category
            .as_deref()
            .map(str::parse::<MetonymyCategory>)
            .transpose()
            .map_err(|e| RowErrorKind::Malformed(e.to_string()))?;
        let gold = self
            .label
            .as_deref()
            .map(str::parse::<MetonymyLabel>)
            .transpose()
            .map_err(|e| RowErrorKind::Malformed(e.to_string()))?;
        if self.id.is_empty() {
            return Err(RowErrorKind::Malformed("empty id".into()));
        }
        let occurrence = self.target_index.unwrap_or(0);
        let found = tokens::find_occurrences(&self.sentence, &self.target).len();
        if found <= occurrence {
            return Err(RowErrorKind::TargetNotFound {
                target: self.target,
                occurrence,
                found,
            });
        }
        Ok(Instance {
            id: self.id,
            sentence: self.sentence,
            target: self.target,
            target_occurrence: occurrence,
            category,
            gold,
            context_before: self.context_before,
            context_after: self.context_after,
        })
    }
}

/// Parses normalized JSONL, keeping valid rows and collecting rejected ones.
pub fn parse_dataset(name: &str, reader: impl BufRead) -> std::io::Result<(Dataset, Vec<RowError>)> {
    let mut instances = Vec::new();
    let mut rejected = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<RawInstance>(&line)
            .map_err(|e| RowErrorKind::Malformed(e.to_string()))
            .and_then(RawInstance::into_instance);
        match parsed {
            Ok(inst) => {
                if !seen.insert(inst.id.clone()) {
                    rejected.push(RowError {
                        line: lineno,
                        kind: RowErrorKind::DuplicateId(inst.id),
                    });
                } else {
                    instances.push(inst);
                }
            }
            Err(kind) => rejected.push(RowError { line: lineno, kind }),
        }
    }
    Ok((Dataset::new(name, instances), rejected))
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Loads a dataset, returning valid rows plus the rejected ones.
pub fn load_dataset_lenient(path: &Path) -> Result<(Dataset, Vec<RowError>), DataError> {
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    parse_dataset(&dataset_name(path), BufReader::new(file)).map_err(|e| DataError::io(path, e))
}

/// Loads a dataset; any rejected row fails the load and all rejected rows are reported.
pub fn load_dataset(path: &Path) -> Result<Dataset, DataError> {
    let (dataset, rejected) = load_dataset_lenient(path)?;
    if rejected.is_empty() {
        Ok(dataset)
    } else {
        Err(DataError::Rows(rejected))
    }
}

pub fn write_dataset(dataset: &Dataset, path: &Path) -> Result<(), DataError> {
    let mut out = String::new();
    for inst in &dataset.instances {
        out.push_str(&serde_json::to_string(&RawInstance::from_instance(inst)).expect("serializable"));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVote {
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    parse_failed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trace_ref: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrediction {
    id: String,
    strategy: String,
    #[serde(rename = "final")]
    final_label: String,
    votes: Vec<RawVote>,
    parse_failures: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    predicted_category: Option<String>,
}

pub(crate) fn prediction_to_json(p: &Prediction) -> String {
    let raw = RawPrediction {
        id: p.id.clone(),
        strategy: p.strategy.as_str().to_string(),
        final_label: p.final_label.prediction_str().to_string(),
        votes: p
            .votes
            .iter()
            .map(|v| RawVote {
                label: v.label.prediction_str().to_string(),
                category: v.category.map(|c| c.as_str().to_string()),
                parse_failed: v.parse_failed,
                trace_ref: v.trace_ref.clone(),
            })
            .collect(),
        parse_failures: p.parse_failures,
        predicted_category: p.predicted_category.map(|c| c.as_str().to_string()),
    };
    serde_json::to_string(&raw).expect("serializable")
}

pub(crate) fn prediction_from_json(line: &str) -> Result<Prediction, String> {
    let raw: RawPrediction = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let strategy: Strategy = raw.strategy.parse().map_err(|e: super::ParseEnumError| e.to_string())?;
    let final_label: MetonymyLabel = raw
        .final_label
        .parse()
        .map_err(|e: super::ParseEnumError| e.to_string())?;
    let votes = raw
        .votes
        .into_iter()
        .map(|v| -> Result<VoteRecord, String> {
            Ok(VoteRecord {
                label: v.label.parse().map_err(|e: super::ParseEnumError| e.to_string())?,
                category: v
                    .category
                    .as_deref()
                    .map(str::parse::<SemanticCategory>)
                    .transpose()
                    .map_err(|e| e.to_string())?,
                parse_failed: v.parse_failed,
                trace_ref: v.trace_ref,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let predicted_category = raw
        .predicted_category
        .as_deref()
        .map(str::parse::<SemanticCategory>)
        .transpose()
        .map_err(|e| e.to_string())?;
    let p = Prediction {
        id: raw.id,
        strategy,
        votes,
        final_label,
        predicted_category,
        parse_failures: raw.parse_failures,
    };
    p.validate().map_err(|e| e.to_string())?;
    Ok(p)
}

/// Writes one prediction per line; refuses predictions that break their invariants.
pub fn write_predictions(preds: &[Prediction], path: &Path) -> Result<(), DataError> {
    let mut out = String::new();
    for p in preds {
        p.validate()?;
        out.push_str(&prediction_to_json(p));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>, DataError> {
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| DataError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let p =
            prediction_from_json(&line).map_err(|message| DataError::MalformedPrediction { line: idx + 1, message })?;
        out.push(p);
    }
    Ok(out)
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DataError> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let res = (|| {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        let mut w = BufWriter::new(File::create(&tmp)?);
        w.write_all(bytes)?;
        w.flush()?;
        drop(w);
        fs::rename(&tmp, path)
    })();
    res.map_err(|e| DataError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::MetonymyLabel::*;

    fn parse(text: &str) -> (Dataset, Vec<RowError>) {
        parse_dataset("t", text.as_bytes()).unwrap()
    }

    #[test]
    fn empty_input() {
        let (d, rej) = parse("");
        assert!(d.is_empty());
        assert!(rej.is_empty());
    }

    #[test]
    fn rejects_missing_target() {
        let text = r#"{"id":"a","sentence":"the man sips the wine","target":"glass","category":"container","label":"metonymic"}"#;
        let (d, rej) = parse(text);
        assert!(d.is_empty());
        assert_eq!(rej.len(), 1);
        assert_eq!(rej[0].line, 1);
        assert!(matches!(rej[0].kind, RowErrorKind::TargetNotFound { .. }));
    }

    #[test]
    fn rejects_duplicates_and_bad_fields() {
        let text = concat!(
            r#"{"id":"a","sentence":"the man sips the glass","target":"glass","category":null,"label":null}"#,
            "\n",
            r#"{"id":"a","sentence":"the man sips the glass","target":"glass","category":null,"label":null}"#,
            "\n",
            r#"{"id":"b","sentence":"the man sips the glass","target":"glass","category":"metaphor","label":null}"#,
            "\n",
            r#"{"id":"c","sentence":"the man sips the glass","target":3}"#,
            "\n",
            r#"{"id":"d","sentence":"the man sips the glass","target":"glass","target_index":1}"#,
        );
        let (d, rej) = parse(text);
        assert_eq!(d.len(), 1);
        let lines: Vec<usize> = rej.iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![2, 3, 4, 5]);
        assert_eq!(rej[0].kind, RowErrorKind::DuplicateId("a".into()));
        assert!(matches!(rej[1].kind, RowErrorKind::Malformed(_)));
        assert!(matches!(rej[3].kind, RowErrorKind::TargetNotFound { found: 1, .. }));
    }

    #[test]
    fn prediction_file_with_corrupt_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        let preds: Vec<Prediction> = (0..10)
            .map(|i| {
                Prediction::from_votes(format!("p{i}"), Strategy::Basic, vec![VoteRecord::new(Metonymic)]).unwrap()
            })
            .collect();
        write_predictions(&preds, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines[6] = r#"{"id":"p6","strategy":"basic","final":"metonymic","votes":[}"#;
        fs::write(&path, lines.join("\n")).unwrap();
        match read_predictions(&path) {
            Err(DataError::MalformedPrediction { line, .. }) => assert_eq!(line, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn write_refuses_even_votes() {
        let dir = tempfile::tempdir().unwrap();
        let bad = Prediction {
            id: "x".into(),
            strategy: Strategy::Basic,
            votes: vec![VoteRecord::new(Metonymic), VoteRecord::new(Metonymic)],
            final_label: Metonymic,
            predicted_category: None,
            parse_failures: 0,
        };
        let err = write_predictions(&[bad], &dir.path().join("p.jsonl")).unwrap_err();
        assert!(matches!(err, DataError::Prediction(PredictionError::EvenVotes { .. })));
        assert!(!dir.path().join("p.jsonl").exists());
    }

    #[test]
    fn prediction_wire_format() {
        let mut v = VoteRecord::new(NonMetonymic);
        v.category = Some(SemanticCategory::Container);
        let p = Prediction::from_votes("a", Strategy::Cot2s, vec![v]).unwrap();
        assert_eq!(
            prediction_to_json(&p),
            r#"{"id":"a","strategy":"cot2s","final":"literal","votes":[{"label":"literal","category":"container"}],"parse_failures":0,"predicted_category":"container"}"#
        );
    }
}
