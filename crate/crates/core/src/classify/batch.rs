use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{Classifier, InstanceResult, StepParams, StepTrace};
use crate::data::{prediction_from_json, prediction_to_json, write_atomic, DataError, Dataset, Prediction, Strategy};

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOptions {
    pub strategy: Strategy,
    pub n_votes: usize,
    pub concurrency: usize,
    pub out_path: PathBuf,
    /// Defaults to `<out>.traces.jsonl`.
    pub trace_path: Option<PathBuf>,
    /// Defaults to `<out>.manifest.json`.
    pub manifest_path: Option<PathBuf>,
    pub seed: u64,
    /// Full run configuration, copied into the manifest.
    pub config: Option<serde_json::Value>,
}

impl BatchOptions {
    pub fn new(strategy: Strategy, out_path: impl Into<PathBuf>) -> Self {
        BatchOptions {
            strategy,
            n_votes: 1,
            concurrency: 1,
            out_path: out_path.into(),
            trace_path: None,
            manifest_path: None,
            seed: 0,
            config: None,
        }
    }

    pub fn trace_path(&self) -> PathBuf {
        self.trace_path
            .clone()
            .unwrap_or_else(|| sibling(&self.out_path, "traces.jsonl"))
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.manifest_path
            .clone()
            .unwrap_or_else(|| sibling(&self.out_path, "manifest.json"))
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "predictions".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

/// Everything needed to repeat a run against the replay cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub dataset_name: String,
    pub dataset_size: usize,
    /// SHA-256 over instance ids and sentences in order.
    pub dataset_digest: String,
    pub strategy: String,
    pub n_votes: usize,
    pub model: String,
    pub backend: String,
    pub with_context: bool,
    pub sampling: StepParams,
    pub prompt_hashes: BTreeMap<String, String>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BatchSummary {
    pub total: usize,
    /// Instances already present in the output file.
    pub skipped: usize,
    pub completed: usize,
    pub failed: Vec<(String, String)>,
    pub parse_failures: usize,
    pub category_fallbacks: usize,
}

impl BatchSummary {
    pub fn failure_count(&self) -> usize {
        self.failed.len()
    }
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path} holds {found} predictions but this run is {expected}; use another output path")]
    Mismatch {
        path: PathBuf,
        found: String,
        expected: String,
    },
    #[error("vote count must be odd and positive, got {0}")]
    VoteCount(usize),
    #[error(transparent)]
    Data(#[from] DataError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BatchError + '_ {
    move |source| BatchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

// Reads JSONL, tolerating a torn final line left by an interrupted write.
fn read_jsonl<T>(path: &Path, parse: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, BatchError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(io_err(path))?;
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse(line) {
            Ok(v) => out.push(v),
            Err(message) if Some(i) == last => {
                log::warn!("{}: dropping torn last line {}: {message}", path.display(), i + 1);
            }
            Err(message) => {
                return Err(BatchError::Corrupt {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message,
                })
            }
        }
    }
    Ok(out)
}

/// Reads a trace log written by [`run_batch`].
pub fn read_traces(path: &Path) -> Result<Vec<StepTrace>, BatchError> {
    read_jsonl(path, |l| serde_json::from_str(l).map_err(|e| e.to_string()))
}

fn trace_line(t: &StepTrace) -> String {
    serde_json::to_string(t).expect("trace serializes")
}

fn dataset_digest(d: &Dataset) -> String {
    let mut h = Sha256::new();
    for i in &d.instances {
        h.update(i.id.as_bytes());
        h.update([0]);
        h.update(i.sentence.as_bytes());
        h.update([0]);
        h.update(i.target.as_bytes());
        h.update([0]);
    }
    hex::encode(h.finalize())
}

enum Outcome {
    Done(InstanceResult),
    Failed { error: String, traces: Vec<StepTrace> },
}

/// Classifies every instance of `dataset`, writing predictions and traces in
/// dataset order.
///
/// Instances that already have a prediction in `out_path` are skipped, so an
/// interrupted run can be restarted with the same arguments. Per-instance
/// failures are logged and counted; the run carries on.
pub fn run_batch(
    dataset: &Dataset,
    classifier: &Classifier<'_>,
    opts: &BatchOptions,
) -> Result<BatchSummary, BatchError> {
    if opts.n_votes == 0 || opts.n_votes.is_multiple_of(2) {
        return Err(BatchError::VoteCount(opts.n_votes));
    }
    let out_path = &opts.out_path;
    let trace_path = opts.trace_path();
    if let Some(parent) = out_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }

    let wanted: HashSet<&str> = dataset.instances.iter().map(|i| i.id.as_str()).collect();
    let mut done: HashMap<String, Prediction> = HashMap::new();
    for p in read_jsonl(out_path, prediction_from_json)? {
        if p.strategy != opts.strategy || p.votes.len() != opts.n_votes {
            return Err(BatchError::Mismatch {
                path: out_path.clone(),
                found: format!("{} x{}", p.strategy, p.votes.len()),
                expected: format!("{} x{}", opts.strategy, opts.n_votes),
            });
        }
        if wanted.contains(p.id.as_str()) {
            done.insert(p.id.clone(), p);
        }
    }
    let mut traces: HashMap<String, Vec<StepTrace>> = HashMap::new();
    for t in read_traces(&trace_path)? {
        if done.contains_key(&t.instance_id) {
            traces.entry(t.instance_id.clone()).or_default().push(t);
        }
    }

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        dataset_name: dataset.name.clone(),
        dataset_size: dataset.len(),
        dataset_digest: dataset_digest(dataset),
        strategy: opts.strategy.to_string(),
        n_votes: opts.n_votes,
        model: classifier.model.clone(),
        backend: classifier.backend.describe(),
        with_context: classifier.with_context,
        sampling: classifier.params,
        prompt_hashes: classifier.prompts.hashes(),
        seed: opts.seed,
        config: opts.config.clone(),
    };
    let manifest_path = opts.manifest_path();
    write_atomic(
        &manifest_path,
        (serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n").as_bytes(),
    )?;

    // Normalize what survived from a previous run before appending to it.
    let rewrite =
        |done: &HashMap<String, Prediction>, traces: &HashMap<String, Vec<StepTrace>>| -> Result<(), BatchError> {
            let mut preds = String::new();
            let mut trs = String::new();
            for inst in &dataset.instances {
                if let Some(p) = done.get(&inst.id) {
                    preds.push_str(&prediction_to_json(p));
                    preds.push('\n');
                }
                for t in traces.get(&inst.id).into_iter().flatten() {
                    trs.push_str(&trace_line(t));
                    trs.push('\n');
                }
            }
            write_atomic(out_path, preds.as_bytes())?;
            write_atomic(&trace_path, trs.as_bytes())?;
            Ok(())
        };
    rewrite(&done, &traces)?;

    let work: Vec<usize> = (0..dataset.len())
        .filter(|&i| !done.contains_key(&dataset.instances[i].id))
        .collect();
    let mut summary = BatchSummary {
        total: dataset.len(),
        skipped: dataset.len() - work.len(),
        ..Default::default()
    };

    let mut pred_file = OpenOptions::new()
        .append(true)
        .open(out_path)
        .map_err(io_err(out_path))?;
    let mut trace_file = OpenOptions::new()
        .append(true)
        .open(&trace_path)
        .map_err(io_err(&trace_path))?;

    let next = AtomicUsize::new(0);
    let workers = opts.concurrency.max(1).min(work.len().max(1));
    let (tx, rx) = mpsc::channel::<(usize, Outcome)>();

    let mut io_result: Result<(), BatchError> = Ok(());
    std::thread::scope(|s| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            let work = &work;
            s.spawn(move || loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(&idx) = work.get(k) else { break };
                let inst = &dataset.instances[idx];
                let outcome = match classifier.self_consistency(inst, opts.strategy, opts.n_votes) {
                    Ok(r) => Outcome::Done(r),
                    Err(e) => Outcome::Failed {
                        error: e.to_string(),
                        traces: e.partial_traces,
                    },
                };
                if tx.send((k, outcome)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        // Flush in work order as results arrive.
        let mut pending: BTreeMap<usize, Outcome> = BTreeMap::new();
        let mut flushed = 0usize;
        for (k, outcome) in rx {
            pending.insert(k, outcome);
            while let Some(outcome) = pending.remove(&flushed) {
                let inst = &dataset.instances[work[flushed]];
                flushed += 1;
                let (pred_line, inst_traces) = match outcome {
                    Outcome::Done(r) => {
                        summary.completed += 1;
                        summary.parse_failures += r.prediction.parse_failures;
                        summary.category_fallbacks += r.category_fallbacks;
                        let line = prediction_to_json(&r.prediction);
                        done.insert(inst.id.clone(), r.prediction);
                        (Some(line), r.traces)
                    }
                    Outcome::Failed { error, traces } => {
                        log::error!("{error}");
                        summary.failed.push((inst.id.clone(), error));
                        (None, traces)
                    }
                };
                if io_result.is_err() {
                    continue;
                }
                let mut write = || -> std::io::Result<()> {
                    for t in &inst_traces {
                        writeln!(trace_file, "{}", trace_line(t))?;
                    }
                    trace_file.flush()?;
                    if let Some(line) = &pred_line {
                        writeln!(pred_file, "{line}")?;
                        pred_file.flush()?;
                    }
                    Ok(())
                };
                if let Err(e) = write() {
                    io_result = Err(io_err(out_path)(e));
                }
                traces.insert(inst.id.clone(), inst_traces);
            }
        }
    });
    io_result?;
    drop(pred_file);
    drop(trace_file);

    // Resumed runs append after the skipped block; restore dataset order.
    rewrite(&done, &traces)?;
    Ok(summary)
}
