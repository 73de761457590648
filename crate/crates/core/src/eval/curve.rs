use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use super::{report, EvalError};
use crate::data::{Dataset, Prediction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VoteCurveRow {
    pub n: usize,
    pub met_f1: f64,
    /// `met_f1` minus the n = 1 value.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VoteCurve {
    pub rows: Vec<VoteCurveRow>,
}

/// Metonymic F1 per vote count, relative to the single-vote run.
pub fn vote_curve(sets: &BTreeMap<usize, Vec<Prediction>>, dataset: &Dataset) -> Result<VoteCurve, EvalError> {
    if let Some(&n) = sets.keys().find(|&&n| n % 2 == 0) {
        return Err(EvalError::EvenVoteCount(n));
    }
    let base = sets.get(&1).ok_or(EvalError::MissingBaseline)?;
    let ids = |ps: &[Prediction]| ps.iter().map(|p| p.id.clone()).collect::<BTreeSet<_>>();
    let base_ids = ids(base);
    let base_f1 = report(base, dataset)?.metonymic.f1;
    let mut rows = Vec::with_capacity(sets.len());
    for (&n, preds) in sets {
        if ids(preds) != base_ids {
            return Err(EvalError::IdSetMismatch(n));
        }
        let met_f1 = report(preds, dataset)?.metonymic.f1;
        rows.push(VoteCurveRow {
            n,
            met_f1,
            delta: met_f1 - base_f1,
        });
    }
    Ok(VoteCurve { rows })
}

impl VoteCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,met_f1,delta_vs_n1\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{:.6},{:+.6}", r.n, r.met_f1, r.delta);
        }
        s
    }
}

impl std::fmt::Display for VoteCurve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:>5}{:>10}{:>10}", "votes", "met F1", "delta")?;
        for r in &self.rows {
            writeln!(f, "{:>5}{:>10.1}{:>+10.1}", r.n, 100.0 * r.met_f1, 100.0 * r.delta)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Instance, MetonymyLabel, Strategy, VoteRecord};
    use crate::SemanticCategory;
    use approx::assert_abs_diff_eq;
    use MetonymyLabel::*;

    /// `tp` true positives and `x` errors split evenly between fp and fn give
    /// met F1 = 2tp / (2tp + x).
    fn engineered(tp: usize, fp: usize, fn_: usize, tn: usize) -> (Dataset, Vec<Prediction>) {
        let mut inst = Vec::new();
        let mut preds = Vec::new();
        let mut push = |g: MetonymyLabel, p: MetonymyLabel| {
            let id = format!("i{}", inst.len());
            inst.push(Instance::new(id.clone(), "a glass", "glass").with_gold(g));
            preds.push(
                Prediction::from_votes(
                    id,
                    Strategy::Cot2s,
                    vec![{
                        let mut v = VoteRecord::new(p);
                        v.category = Some(SemanticCategory::General);
                        v
                    }],
                )
                .unwrap(),
            );
        };
        for _ in 0..tp {
            push(Metonymic, Metonymic)
        }
        for _ in 0..fp {
            push(NonMetonymic, Metonymic)
        }
        for _ in 0..fn_ {
            push(Metonymic, NonMetonymic)
        }
        for _ in 0..tn {
            push(NonMetonymic, NonMetonymic)
        }
        (Dataset::new("e", inst), preds)
    }

    #[test]
    fn identical_sets_have_zero_delta() {
        let (d, p) = engineered(5, 2, 3, 10);
        let sets: BTreeMap<usize, Vec<Prediction>> = [1, 3, 5].into_iter().map(|n| (n, p.clone())).collect();
        let c = vote_curve(&sets, &d).unwrap();
        assert!(c.rows.iter().all(|r| r.delta == 0.0));
        assert!(c.to_csv().starts_with("n,met_f1,delta_vs_n1\n1,"));
    }

    /// Predictions over a fixed 1000 positive / 467 negative dataset.
    fn fixed(tp: usize, fp: usize) -> (Dataset, Vec<Prediction>) {
        let (d, _) = engineered(1000, 0, 0, 467);
        let preds = d
            .instances
            .iter()
            .enumerate()
            .map(|(k, i)| {
                let l = match (i.gold, k) {
                    (Some(Metonymic), k) if k < tp => Metonymic,
                    (Some(NonMetonymic), k) if k - 1000 < fp => Metonymic,
                    _ => NonMetonymic,
                };
                Prediction::from_votes(i.id.clone(), Strategy::Basic, vec![VoteRecord::new(l)]).unwrap()
            })
            .collect();
        (d, preds)
    }

    #[test]
    fn gain_from_0633_to_0683() {
        // n=1: tp 633, fp = fn = 367, F1 = 1266/2000.
        // n=9: tp 683, fp = fn = 317, F1 = 1366/2000.
        let (d, p1) = fixed(633, 367);
        let (_, p9) = fixed(683, 317);
        let sets = BTreeMap::from([(1, p1), (9, p9)]);
        let c = vote_curve(&sets, &d).unwrap();
        assert_abs_diff_eq!(c.rows[0].met_f1, 0.633, epsilon = 1e-12);
        assert_abs_diff_eq!(c.rows[1].met_f1, 0.683, epsilon = 1e-12);
        assert_abs_diff_eq!(c.rows[1].delta, 0.050, epsilon = 1e-12);
        assert!(c.to_csv().contains("9,0.683000,+0.050000"));
    }

    #[test]
    fn errors() {
        let (d, p) = engineered(2, 1, 1, 2);
        let sets = BTreeMap::from([(3, p.clone())]);
        assert_eq!(vote_curve(&sets, &d), Err(EvalError::MissingBaseline));
        let sets = BTreeMap::from([(1, p.clone()), (2, p.clone())]);
        assert_eq!(vote_curve(&sets, &d), Err(EvalError::EvenVoteCount(2)));
        let sets = BTreeMap::from([(1, p.clone()), (3, p[1..].to_vec())]);
        assert_eq!(vote_curve(&sets, &d), Err(EvalError::IdSetMismatch(3)));
    }
}
