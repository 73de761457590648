//! Seed pairs to a noun-verb lexicon. Each seed's noun is swapped for
//! model-suggested alternatives, verbs are proposed for every new noun, and
//! the lexicon is their cross product.
//!
//!     cargo run --example augment_lexicon

use std::path::PathBuf;

use metonymy::llm::ScriptedBackend;
use metonymy::mining::{build_pair_lexicon, read_seeds, AugmentOptions};

fn main() {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let seeds = read_seeds(&fixtures.join("seeds.jsonl")).unwrap();
    let backend = ScriptedBackend::from_json_file(&fixtures.join("augment_script.json")).unwrap();

    let lexicon = build_pair_lexicon(&seeds, Some(&backend), &AugmentOptions::new("scripted")).unwrap();
    let stats = lexicon.stats();
    println!(
        "{} seeds -> {} pairs ({} seed, {} augmented), {} nouns, {} verbs",
        seeds.len(),
        stats.pairs,
        stats.seed_pairs,
        stats.augmented_pairs,
        stats.nouns,
        stats.verbs
    );
    for (noun, verb, category, provenance) in lexicon.iter().take(10) {
        println!("  {noun:<10} {verb:<8} {:<10} {provenance:?}", category.as_str());
    }
}
