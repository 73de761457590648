//! Scan a CoNLL-U file for lexicon noun-verb pairs joined by a dependency
//! edge, then draw a sample balanced across nouns.
//!
//!     cargo run --example mine_conllu -- [file.conllu]

use std::path::PathBuf;

use metonymy::mining::{export_candidates, sample_uniform, scan_conllu, PairLexicon, PairProvenance};
use metonymy::MetonymyCategory;

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/sample.conllu"));

    let mut lexicon = PairLexicon::new();
    for (noun, verb) in [("glass", "sip"), ("mug", "gulp"), ("cup", "fill"), ("cup", "drink")] {
        lexicon.insert(noun, verb, MetonymyCategory::Container, PairProvenance::Seed);
    }
    for (noun, verb) in [("arena", "roar"), ("city", "celebrate"), ("crowd", "chant")] {
        lexicon.insert(noun, verb, MetonymyCategory::Location, PairProvenance::Seed);
    }

    let (candidates, stats) = scan_conllu(&[path.as_path()], &lexicon).unwrap();
    println!(
        "{} sentences, {} malformed blocks skipped, {} candidates",
        stats.sentences, stats.malformed_blocks, stats.candidates
    );
    for c in &candidates {
        println!("  {:<8} {:<10} {:<7} {}", c.noun, c.verb, c.relation, c.sentence);
    }

    let picked = sample_uniform(&candidates, 3, 42);
    let (dataset, _) = export_candidates("sample", &picked);
    for inst in &dataset.instances {
        println!("sampled {}: {}", inst.id, inst.sentence);
    }
}
