//! Batch classification with a record/replay cache. The first pass records
//! the scripted answers, the second replays them without any backend and at
//! a different concurrency, and the outputs are compared byte for byte.
//!
//!     cargo run --example batch_replay

use std::path::PathBuf;

use metonymy::classify::{run_batch, BatchOptions, Classifier, PromptSet};
use metonymy::data::load_dataset;
use metonymy::llm::{CachedBackend, ChatBackend, ScriptedBackend};
use metonymy::Strategy;

fn main() {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let dataset = load_dataset(&fixtures.join("annotated.jsonl")).unwrap();
    let script = ScriptedBackend::from_json_file(&fixtures.join("annotated_script.json")).unwrap();
    let work = tempfile::tempdir().unwrap();
    let cache = work.path().join("cache");
    let prompts = PromptSet::builtin();

    let run = |backend: &dyn ChatBackend, name: &str, concurrency: usize| {
        let classifier = Classifier::new(backend, &prompts, "scripted");
        let mut opts = BatchOptions::new(Strategy::Cot2s, work.path().join(name));
        opts.n_votes = 3;
        opts.concurrency = concurrency;
        let summary = run_batch(&dataset, &classifier, &opts).unwrap();
        println!(
            "{name}: {} classified, {} failed, {} category fallbacks",
            summary.completed,
            summary.failure_count(),
            summary.category_fallbacks
        );
        std::fs::read(&opts.out_path).unwrap()
    };

    let recorder = CachedBackend::new(Box::new(script), &cache).unwrap();
    let recorded = run(&recorder, "recorded.jsonl", 2);
    println!("forwarded {} calls to the script", recorder.forwarded_calls());

    let replay = CachedBackend::replay_only(&cache).unwrap();
    let replayed = run(&replay, "replayed.jsonl", 8);
    println!("identical: {}", recorded == replayed);
}
