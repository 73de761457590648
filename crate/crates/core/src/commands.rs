//! One function per CLI subcommand. Each reads its inputs, writes its output
//! files and returns a printable summary.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::json;
use thiserror::Error;

use crate::classify::{run_batch, BatchOptions, Classifier};
use crate::config::RunConfig;
use crate::data::{dataset_stats, load_dataset, read_predictions, write_atomic, write_dataset, Dataset, MetonymyLabel};
use crate::eval::{cohen_kappa, coverage, report, vote_curve};
use crate::mining::{
    build_pair_lexicon, export_candidates, read_candidates, read_seeds, sample_per_category, sample_uniform,
    scan_conllu, write_candidates, PairLexicon,
};

#[derive(Debug, Error)]
pub enum CommandError {
    /// Bad arguments or missing inputs.
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Usage(_) => 2,
            CommandError::Failed(_) => 1,
        }
    }
}

/// What a command did. A nonzero `failures` count means some items were
/// skipped even though the outputs were written.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CommandOutput {
    pub message: String,
    pub failures: usize,
}

fn failed(e: impl std::fmt::Display) -> CommandError {
    CommandError::Failed(e.to_string())
}

fn require(path: &Path, what: &str) -> Result<(), CommandError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CommandError::Usage(format!("{what} {} does not exist", path.display())))
    }
}

/// `dir/stem.suffix` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn write_json(path: &Path, v: &impl serde::Serialize) -> Result<(), CommandError> {
    let text = serde_json::to_string_pretty(v).map_err(failed)? + "\n";
    write_atomic(path, text.as_bytes()).map_err(failed)
}

fn load(path: &Path, what: &str) -> Result<Dataset, CommandError> {
    require(path, what)?;
    load_dataset(path).map_err(failed)
}

/// Seeds to lexicon. Progress is checkpointed next to `out` so a rerun only
/// asks the model about unfinished seeds.
pub fn cmd_augment(seeds_path: &Path, out: &Path, cfg: &RunConfig) -> Result<CommandOutput, CommandError> {
    require(seeds_path, "seeds file")?;
    let seeds = read_seeds(seeds_path).map_err(failed)?;
    let backend = cfg.build_backend().map_err(failed)?;
    let mut opts = cfg.augment_options().map_err(failed)?;
    opts.checkpoint = Some(sibling(out, "checkpoint.json"));
    let lex = build_pair_lexicon(&seeds, backend.as_deref(), &opts).map_err(failed)?;
    lex.write(out).map_err(failed)?;
    let stats = lex.stats();
    write_json(&sibling(out, "stats.json"), &stats)?;
    Ok(CommandOutput {
        message: format!(
            "{} seeds -> {} pairs ({} seed, {} augmented) over {} nouns / {} verbs",
            seeds.len(),
            stats.pairs,
            stats.seed_pairs,
            stats.augmented_pairs,
            stats.nouns,
            stats.verbs
        ),
        failures: 0,
    })
}

/// CoNLL-U files to candidates. Writes the dataset-schema export to `out`,
/// full candidate records to `<stem>.candidates.jsonl` and accounting to
/// `<stem>.stats.json`.
pub fn cmd_mine(conllu: &[PathBuf], lexicon_path: &Path, out: &Path) -> Result<CommandOutput, CommandError> {
    require(lexicon_path, "lexicon")?;
    for p in conllu {
        require(p, "corpus file")?;
    }
    let lex = PairLexicon::read(lexicon_path).map_err(failed)?;
    let paths: Vec<&Path> = conllu.iter().map(PathBuf::as_path).collect();
    let (cands, mut stats) = scan_conllu(&paths, &lex).map_err(failed)?;
    let name = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let (dataset, skipped) = export_candidates(&name, &cands);
    stats.export_skipped = skipped;
    write_dataset(&dataset, out).map_err(failed)?;
    write_candidates(&cands, &sibling(out, "candidates.jsonl")).map_err(failed)?;
    write_json(
        &sibling(out, "stats.json"),
        &json!({ "scan": stats, "lexicon": lex.stats() }),
    )?;
    let mut message = format!(
        "{} sentences in {} files: {} candidates from {} sentences, {} pairs / {} nouns / {} verbs",
        stats.sentences,
        stats.files,
        stats.candidates,
        stats.sentences_with_candidates,
        stats.distinct_pairs,
        stats.distinct_nouns,
        stats.distinct_verbs
    );
    if stats.malformed_blocks > 0 {
        let _ = write!(message, "; {} malformed blocks skipped", stats.malformed_blocks);
    }
    Ok(CommandOutput {
        message,
        failures: stats.malformed_blocks,
    })
}

/// Candidate records to a noun-balanced sample, `n` in total or `n` per
/// category.
pub fn cmd_sample(
    candidates_path: &Path,
    n: usize,
    per_category: bool,
    out: &Path,
    cfg: &RunConfig,
) -> Result<CommandOutput, CommandError> {
    require(candidates_path, "candidates file")?;
    let cands = read_candidates(candidates_path).map_err(failed)?;
    let picked = if per_category {
        sample_per_category(&cands, n, cfg.seed)
    } else {
        sample_uniform(&cands, n, cfg.seed)
    };
    let name = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let (dataset, skipped) = export_candidates(&name, &picked);
    write_dataset(&dataset, out).map_err(failed)?;
    write_candidates(&picked, &sibling(out, "candidates.jsonl")).map_err(failed)?;
    let nouns = picked
        .iter()
        .map(|c| c.noun.as_str())
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    Ok(CommandOutput {
        message: format!(
            "sampled {} of {} candidates over {nouns} nouns (seed {}){}",
            picked.len(),
            cands.len(),
            cfg.seed,
            if skipped > 0 {
                format!("; {skipped} not exportable")
            } else {
                String::new()
            }
        ),
        failures: skipped,
    })
}

/// Runs the configured strategy over a dataset. Resumes from `out` if it
/// already holds predictions from the same strategy and vote count.
pub fn cmd_classify(dataset_path: &Path, out: &Path, cfg: &RunConfig) -> Result<CommandOutput, CommandError> {
    let (strategy, n_votes) = cfg
        .strategy_and_votes()
        .map_err(|e| CommandError::Usage(e.to_string()))?;
    let dataset = load(dataset_path, "dataset")?;
    let backend = cfg
        .build_backend()
        .map_err(|e| CommandError::Usage(e.to_string()))?
        .ok_or_else(|| CommandError::Usage("classification needs a backend (--backend)".into()))?;
    let prompts = cfg.prompts().map_err(failed)?;
    let mut classifier = Classifier::new(backend.as_ref(), &prompts, cfg.model()).with_context(cfg.with_context);
    classifier.params = cfg.sampling;
    let mut opts = BatchOptions::new(strategy, out);
    opts.n_votes = n_votes;
    opts.concurrency = cfg.concurrency.max(1);
    opts.seed = cfg.seed;
    opts.config = Some(cfg.to_json());
    let s = run_batch(&dataset, &classifier, &opts).map_err(failed)?;
    let mut message = format!(
        "{strategy} x{n_votes}: {} instances, {} resumed, {} classified, {} failed; {} unparsable votes, {} category fallbacks",
        s.total,
        s.skipped,
        s.completed,
        s.failure_count(),
        s.parse_failures,
        s.category_fallbacks
    );
    for (id, e) in &s.failed {
        let _ = write!(message, "\n  {id}: {e}");
    }
    Ok(CommandOutput {
        message,
        failures: s.failure_count(),
    })
}

/// Scores predictions against gold labels. Dataset instances without a
/// prediction are reported and left out of the scores.
pub fn cmd_evaluate(
    predictions_path: &Path,
    dataset_path: &Path,
    out: Option<&Path>,
    per_category: bool,
) -> Result<CommandOutput, CommandError> {
    require(predictions_path, "predictions file")?;
    let dataset = load(dataset_path, "dataset")?;
    let preds = read_predictions(predictions_path).map_err(failed)?;
    let cov = coverage(&preds, &dataset);
    let mut r = report(&preds, &dataset).map_err(failed)?;
    if let Some(out) = out {
        write_json(out, &json!({ "coverage": cov, "metrics": r }))?;
    }
    let mut message = String::new();
    if !cov.missing.is_empty() {
        let _ = writeln!(
            message,
            "warning: {} of {} instances have no prediction; scoring the {} that do",
            cov.missing.len(),
            cov.dataset_size,
            cov.scored
        );
    }
    if !per_category {
        r.per_category.clear();
    }
    message.push_str(r.to_string().trim_end());
    Ok(CommandOutput { message, failures: 0 })
}

/// Per-category label counts; with `conmec`, also checks them against the
/// published ConMeC distribution.
pub fn cmd_stats(dataset_path: &Path, conmec: bool) -> Result<CommandOutput, CommandError> {
    let dataset = load(dataset_path, "dataset")?;
    let st = dataset_stats(&dataset);
    let mut message = st.to_string().trim_end().to_string();
    let mut failures = 0;
    if conmec {
        match st.verify_conmec() {
            Ok(()) => message.push_str("\nmatches the ConMeC distribution"),
            Err(diffs) => {
                failures = diffs.len();
                for d in diffs {
                    let _ = write!(message, "\nmismatch: {d}");
                }
            }
        }
    }
    Ok(CommandOutput { message, failures })
}

/// Agreement between two annotation files (dataset schema, gold labels),
/// matched by id.
pub fn cmd_kappa(a_path: &Path, b_path: &Path, out: Option<&Path>) -> Result<CommandOutput, CommandError> {
    let a = load(a_path, "annotation file")?;
    let b = load(b_path, "annotation file")?;
    let b_by_id: HashMap<&str, Option<MetonymyLabel>> = b.instances.iter().map(|i| (i.id.as_str(), i.gold)).collect();
    let mut la = Vec::new();
    let mut lb = Vec::new();
    let mut unlabeled = 0;
    for inst in &a.instances {
        match (inst.gold, b_by_id.get(inst.id.as_str()).copied().flatten()) {
            (Some(x), Some(y)) => {
                la.push(x);
                lb.push(y);
            }
            _ => unlabeled += 1,
        }
    }
    let k = cohen_kappa(&la, &lb).map_err(failed)?;
    if let Some(out) = out {
        write_json(out, &json!({ "items": la.len(), "kappa": k }))?;
    }
    let mut message = format!(
        "{} items: observed {:.4}, expected {:.4}, kappa {:.4}",
        la.len(),
        k.observed_agreement,
        k.expected_agreement,
        k.kappa
    );
    if unlabeled > 0 {
        let _ = write!(message, " ({unlabeled} items without a label in both files left out)");
    }
    Ok(CommandOutput { message, failures: 0 })
}

/// Metonymic F1 as a function of vote count. `runs` pairs each vote count
/// with its prediction file; n = 1 must be present.
pub fn cmd_vote_curve(
    dataset_path: &Path,
    runs: &[(usize, PathBuf)],
    out: Option<&Path>,
) -> Result<CommandOutput, CommandError> {
    let dataset = load(dataset_path, "dataset")?;
    let mut sets = BTreeMap::new();
    for (n, p) in runs {
        require(p, "predictions file")?;
        sets.insert(*n, read_predictions(p).map_err(failed)?);
    }
    let curve = vote_curve(&sets, &dataset).map_err(failed)?;
    if let Some(out) = out {
        write_atomic(out, curve.to_csv().as_bytes()).map_err(failed)?;
    }
    Ok(CommandOutput {
        message: curve.to_string().trim_end().to_string(),
        failures: 0,
    })
}

/// Parses `N=path` arguments for `cmd_vote_curve`.
pub fn parse_run_arg(s: &str) -> Result<(usize, PathBuf), String> {
    let (n, p) = s.split_once('=').ok_or_else(|| format!("expected N=PATH, got {s:?}"))?;
    let n: usize = n.trim().parse().map_err(|_| format!("bad vote count in {s:?}"))?;
    Ok((n, PathBuf::from(p)))
}
