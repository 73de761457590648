//! Scoring: per-class precision/recall/F1, accuracy, macro-F1, per-category
//! breakdowns, Cohen's kappa and vote-count curves.
//!
//! Metonymic is the positive class. Any 0/0 ratio is scored as 0, so
//! degenerate prediction sets (e.g. all negative) still get a report.

mod curve;
mod kappa;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::data::{Dataset, MetonymyCategory, MetonymyLabel, Prediction};

pub use curve::{vote_curve, VoteCurve, VoteCurveRow};
pub use kappa::{cohen_kappa, KappaReport};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("no predictions to score")]
    Empty,
    #[error("predictions for ids not in the dataset: {0:?}")]
    UnknownIds(Vec<String>),
    #[error("instances without a gold label: {0:?}")]
    MissingGold(Vec<String>),
    #[error("duplicate prediction ids: {0:?}")]
    DuplicateIds(Vec<String>),
    #[error("label lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("vote curve needs an n = 1 baseline")]
    MissingBaseline,
    #[error("vote counts must be odd, got {0}")]
    EvenVoteCount(usize),
    #[error("prediction set for n = {0} covers different ids than n = 1")]
    IdSetMismatch(usize),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn new(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        ConfusionCounts { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn add(&mut self, gold: MetonymyLabel, predicted: MetonymyLabel) {
        use MetonymyLabel::*;
        match (gold, predicted) {
            (Metonymic, Metonymic) => self.tp += 1,
            (NonMetonymic, Metonymic) => self.fp += 1,
            (Metonymic, NonMetonymic) => self.fn_ += 1,
            (NonMetonymic, NonMetonymic) => self.tn += 1,
        }
    }

    /// Counts with the roles of the two classes exchanged.
    pub fn swapped(&self) -> Self {
        ConfusionCounts::new(self.tn, self.fn_, self.fp, self.tp)
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1 of `positive` from metonymic-positive counts.
pub fn prf(c: &ConfusionCounts, positive: MetonymyLabel) -> ClassScores {
    let c = match positive {
        MetonymyLabel::Metonymic => *c,
        MetonymyLabel::NonMetonymic => c.swapped(),
    };
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassScores { precision, recall, f1 }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CategoryScores {
    pub metonymic: ClassScores,
    pub non_metonymic: ClassScores,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub counts: ConfusionCounts,
    pub accuracy: f64,
    pub metonymic: ClassScores,
    pub non_metonymic: ClassScores,
    pub macro_f1: f64,
    pub per_category: BTreeMap<MetonymyCategory, CategoryScores>,
    /// Scored instances that carry no category.
    pub uncategorized: usize,
}

impl MetricsReport {
    pub fn from_counts(counts: ConfusionCounts) -> Self {
        let metonymic = prf(&counts, MetonymyLabel::Metonymic);
        let non_metonymic = prf(&counts, MetonymyLabel::NonMetonymic);
        MetricsReport {
            counts,
            accuracy: counts.accuracy(),
            metonymic,
            non_metonymic,
            macro_f1: (metonymic.f1 + non_metonymic.f1) / 2.0,
            per_category: BTreeMap::new(),
            uncategorized: 0,
        }
    }
}

/// Scored subset plus how much of the dataset it covers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coverage {
    pub dataset_size: usize,
    pub scored: usize,
    /// Dataset ids with no prediction.
    pub missing: Vec<String>,
}

struct Matched<'a> {
    gold: MetonymyLabel,
    predicted: MetonymyLabel,
    category: Option<MetonymyCategory>,
    _id: &'a str,
}

fn match_up<'a>(preds: &'a [Prediction], dataset: &'a Dataset) -> Result<Vec<Matched<'a>>, EvalError> {
    if preds.is_empty() {
        return Err(EvalError::Empty);
    }
    let by_id: HashMap<&str, &crate::data::Instance> = dataset.instances.iter().map(|i| (i.id.as_str(), i)).collect();
    let mut seen = HashSet::new();
    let mut dups = Vec::new();
    let mut unknown = Vec::new();
    let mut no_gold = Vec::new();
    let mut out = Vec::with_capacity(preds.len());
    for p in preds {
        if !seen.insert(p.id.as_str()) {
            dups.push(p.id.clone());
            continue;
        }
        match by_id.get(p.id.as_str()) {
            None => unknown.push(p.id.clone()),
            Some(inst) => match inst.gold {
                None => no_gold.push(p.id.clone()),
                Some(gold) => out.push(Matched {
                    gold,
                    predicted: p.final_label,
                    category: inst.category,
                    _id: &p.id,
                }),
            },
        }
    }
    if !dups.is_empty() {
        return Err(EvalError::DuplicateIds(dups));
    }
    if !unknown.is_empty() {
        return Err(EvalError::UnknownIds(unknown));
    }
    if !no_gold.is_empty() {
        return Err(EvalError::MissingGold(no_gold));
    }
    Ok(out)
}

/// Confusion counts of `preds` against the gold labels in `dataset`.
pub fn confusion(preds: &[Prediction], dataset: &Dataset) -> Result<ConfusionCounts, EvalError> {
    let mut c = ConfusionCounts::default();
    for m in match_up(preds, dataset)? {
        c.add(m.gold, m.predicted);
    }
    Ok(c)
}

/// Full report over the predicted instances, with a per-category breakdown.
pub fn report(preds: &[Prediction], dataset: &Dataset) -> Result<MetricsReport, EvalError> {
    let matched = match_up(preds, dataset)?;
    let mut total = ConfusionCounts::default();
    let mut per: BTreeMap<MetonymyCategory, ConfusionCounts> = BTreeMap::new();
    let mut uncategorized = 0;
    for m in &matched {
        total.add(m.gold, m.predicted);
        match m.category {
            Some(c) => per.entry(c).or_default().add(m.gold, m.predicted),
            None => uncategorized += 1,
        }
    }
    let mut r = MetricsReport::from_counts(total);
    r.uncategorized = uncategorized;
    r.per_category = per
        .into_iter()
        .map(|(c, counts)| {
            (
                c,
                CategoryScores {
                    metonymic: prf(&counts, MetonymyLabel::Metonymic),
                    non_metonymic: prf(&counts, MetonymyLabel::NonMetonymic),
                    support: counts.total(),
                },
            )
        })
        .collect();
    Ok(r)
}

/// Which dataset ids the predictions cover.
pub fn coverage(preds: &[Prediction], dataset: &Dataset) -> Coverage {
    let ids: HashSet<&str> = preds.iter().map(|p| p.id.as_str()).collect();
    let missing: Vec<String> = dataset
        .instances
        .iter()
        .filter(|i| !ids.contains(i.id.as_str()))
        .map(|i| i.id.clone())
        .collect();
    Coverage {
        dataset_size: dataset.len(),
        scored: dataset.len() - missing.len(),
        missing,
    }
}

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.counts;
        writeln!(
            f,
            "instances {}  (tp {}  fp {}  fn {}  tn {})",
            c.total(),
            c.tp,
            c.fp,
            c.fn_,
            c.tn
        )?;
        writeln!(f, "accuracy  {}   macro-F1  {}", pct(self.accuracy), pct(self.macro_f1))?;
        writeln!(f)?;
        writeln!(f, "{:<16}{:>10}{:>10}{:>10}", "class", "precision", "recall", "F1")?;
        for (name, s) in [("metonymic", &self.metonymic), ("non-metonymic", &self.non_metonymic)] {
            writeln!(
                f,
                "{:<16}{:>10}{:>10}{:>10}",
                name,
                pct(s.precision),
                pct(s.recall),
                pct(s.f1)
            )?;
        }
        if !self.per_category.is_empty() {
            writeln!(f)?;
            writeln!(f, "{:<14}{:>9}{:>10}{:>10}", "category", "support", "met F1", "non F1")?;
            for (cat, s) in &self.per_category {
                writeln!(
                    f,
                    "{:<14}{:>9}{:>10}{:>10}",
                    cat.as_str(),
                    s.support,
                    pct(s.metonymic.f1),
                    pct(s.non_metonymic.f1)
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Instance, Strategy, VoteRecord};
    use approx::assert_abs_diff_eq;
    use MetonymyLabel::*;

    fn pred(id: &str, l: MetonymyLabel) -> Prediction {
        Prediction::from_votes(id, Strategy::Basic, vec![VoteRecord::new(l)]).unwrap()
    }

    fn data(gold: &[MetonymyLabel]) -> Dataset {
        Dataset::new(
            "d",
            gold.iter()
                .enumerate()
                .map(|(i, &g)| Instance::new(format!("i{i}"), "a glass", "glass").with_gold(g))
                .collect(),
        )
    }

    fn six_four() -> (Dataset, Vec<MetonymyLabel>) {
        let gold: Vec<_> = (0..10).map(|i| if i < 6 { Metonymic } else { NonMetonymic }).collect();
        (data(&gold), gold)
    }

    #[test]
    fn confusion_examples() {
        let (d, gold) = six_four();
        let right: Vec<_> = gold
            .iter()
            .enumerate()
            .map(|(i, &g)| pred(&format!("i{i}"), g))
            .collect();
        assert_eq!(confusion(&right, &d).unwrap(), ConfusionCounts::new(6, 0, 0, 4));
        let flipped: Vec<_> = gold
            .iter()
            .enumerate()
            .map(|(i, &g)| pred(&format!("i{i}"), g.flip()))
            .collect();
        assert_eq!(confusion(&flipped, &d).unwrap(), ConfusionCounts::new(0, 4, 6, 0));
        let stray = vec![pred("nope", Metonymic)];
        assert_eq!(confusion(&stray, &d), Err(EvalError::UnknownIds(vec!["nope".into()])));
        assert_eq!(confusion(&[], &d), Err(EvalError::Empty));
        let dup = vec![pred("i0", Metonymic), pred("i0", Metonymic)];
        assert_eq!(confusion(&dup, &d), Err(EvalError::DuplicateIds(vec!["i0".into()])));
    }

    #[test]
    fn prf_examples() {
        let s = prf(&ConfusionCounts::new(6, 0, 0, 4), Metonymic);
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        // P = 3/4, R = 3/5, F1 = 2*0.45/1.35 = 2/3
        let s = prf(&ConfusionCounts::new(3, 1, 2, 4), Metonymic);
        assert_abs_diff_eq!(s.precision, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(s.recall, 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(s.f1, 2.0 / 3.0, epsilon = 1e-12);
        let s = prf(&ConfusionCounts::new(0, 0, 5, 5), Metonymic);
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn swap_symmetry() {
        let c = ConfusionCounts::new(7, 3, 5, 11);
        let a = MetricsReport::from_counts(c);
        let b = MetricsReport::from_counts(c.swapped());
        assert_eq!(a.metonymic, b.non_metonymic);
        assert_eq!(a.non_metonymic, b.metonymic);
        assert_eq!(a.accuracy, b.accuracy);
        assert_abs_diff_eq!(a.macro_f1, b.macro_f1, epsilon = 1e-15);
    }

    #[test]
    fn missing_gold() {
        let d = Dataset::new("d", vec![Instance::new("a", "a glass", "glass")]);
        assert_eq!(
            report(&[pred("a", Metonymic)], &d),
            Err(EvalError::MissingGold(vec!["a".into()]))
        );
    }

    #[test]
    fn per_category_and_coverage() {
        let d = Dataset::new(
            "d",
            vec![
                Instance::new("a", "a glass", "glass")
                    .with_gold(Metonymic)
                    .with_category(MetonymyCategory::Container),
                Instance::new("b", "a glass", "glass")
                    .with_gold(NonMetonymic)
                    .with_category(MetonymyCategory::Container),
                Instance::new("c", "a city", "city")
                    .with_gold(Metonymic)
                    .with_category(MetonymyCategory::Location),
                Instance::new("d", "a city", "city").with_gold(Metonymic),
            ],
        );
        let preds = vec![pred("a", Metonymic), pred("b", Metonymic), pred("c", NonMetonymic)];
        let r = report(&preds, &d).unwrap();
        assert_eq!(r.counts, ConfusionCounts::new(1, 1, 1, 0));
        assert_eq!(r.per_category[&MetonymyCategory::Container].support, 2);
        assert_eq!(r.per_category[&MetonymyCategory::Location].metonymic.f1, 0.0);
        assert_eq!(r.uncategorized, 0);
        let cov = coverage(&preds, &d);
        assert_eq!((cov.scored, cov.missing.clone()), (3, vec!["d".to_string()]));
        let text = r.to_string();
        assert!(text.contains("container"));
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["counts"]["fn"], 1);
        assert!(json["per_category"]["location"].is_object());
    }
}
