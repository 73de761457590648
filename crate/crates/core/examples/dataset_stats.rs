//! Label counts per category for a dataset file, checked against the
//! published ConMeC distribution when `--conmec` is given.
//!
//!     cargo run --example dataset_stats -- [path] [--conmec]

use std::path::PathBuf;

use metonymy::data::{dataset_stats, load_dataset_lenient};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let check = args.iter().any(|a| a == "--conmec");
    let path = args
        .iter()
        .find(|a| !a.starts_with("--"))
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/annotated.jsonl"));

    let (dataset, bad_rows) = load_dataset_lenient(&path).expect("readable dataset");
    for e in &bad_rows {
        eprintln!("skipped: {e}");
    }
    let stats = dataset_stats(&dataset);
    println!("{}: {} instances", path.display(), dataset.len());
    print!("{stats}");
    if check {
        match stats.verify_conmec() {
            Ok(()) => println!("matches the published counts"),
            Err(diffs) => diffs.iter().for_each(|d| println!("mismatch: {d}")),
        }
    }
}
