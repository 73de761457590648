//! Scoring: per-class F1 and macro-F1, per-category breakdown, agreement
//! between two annotators, and how metonymic F1 moves with the vote count.
//!
//!     cargo run --example evaluate

use std::collections::BTreeMap;

use metonymy::eval::{cohen_kappa, report, vote_curve, ConfusionCounts, MetricsReport};
use metonymy::{Dataset, Instance, MetonymyCategory, MetonymyLabel, Prediction, Strategy, VoteRecord};

use MetonymyLabel::{Metonymic as M, NonMetonymic as N};

fn prediction(id: &str, votes: &[MetonymyLabel]) -> Prediction {
    let votes = votes.iter().map(|&l| VoteRecord::new(l)).collect();
    Prediction::from_votes(id, Strategy::Cot, votes).unwrap()
}

fn main() {
    // Scores straight from confusion counts.
    println!("{}", MetricsReport::from_counts(ConfusionCounts::new(30, 10, 20, 40)));

    let gold = [M, M, M, N, N, N, N];
    let cats = [
        MetonymyCategory::Container,
        MetonymyCategory::Producer,
        MetonymyCategory::Location,
        MetonymyCategory::Container,
        MetonymyCategory::Producer,
        MetonymyCategory::Location,
        MetonymyCategory::Product,
    ];
    let dataset = Dataset::new(
        "toy",
        (0..gold.len())
            .map(|i| {
                Instance::new(format!("t{i}"), "They drank the glass.", "glass")
                    .with_gold(gold[i])
                    .with_category(cats[i])
            })
            .collect(),
    );
    // Three votes per item; the single-vote run keeps only the first.
    let votes = [
        [N, M, M],
        [M, M, N],
        [N, N, M],
        [M, N, N],
        [N, N, N],
        [N, M, N],
        [M, N, N],
    ];
    let three: Vec<_> = votes
        .iter()
        .enumerate()
        .map(|(i, v)| prediction(&format!("t{i}"), v))
        .collect();
    let one: Vec<_> = votes
        .iter()
        .enumerate()
        .map(|(i, v)| prediction(&format!("t{i}"), &v[..1]))
        .collect();

    println!("{}", report(&three, &dataset).unwrap());

    let curve = vote_curve(&BTreeMap::from([(1, one), (3, three)]), &dataset).unwrap();
    print!("{}", curve.to_csv());

    let a = [M, M, N, N, M, N, N, M];
    let b = [M, N, N, N, M, N, M, M];
    let k = cohen_kappa(&a, &b).unwrap();
    println!(
        "kappa {:.3} (observed {:.3}, chance {:.3})",
        k.kappa, k.observed_agreement, k.expected_agreement
    );
}
