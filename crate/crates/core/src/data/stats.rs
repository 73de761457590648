use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::{Dataset, MetonymyCategory, MetonymyLabel};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CategoryCounts {
    pub metonymic: usize,
    pub non_metonymic: usize,
    pub unlabeled: usize,
}

impl CategoryCounts {
    pub fn total(&self) -> usize {
        self.metonymic + self.non_metonymic + self.unlabeled
    }

    fn add(&mut self, gold: Option<MetonymyLabel>) {
        match gold {
            Some(MetonymyLabel::Metonymic) => self.metonymic += 1,
            Some(MetonymyLabel::NonMetonymic) => self.non_metonymic += 1,
            None => self.unlabeled += 1,
        }
    }
}

/// Label counts per metonymy category.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DatasetStats {
    pub per_category: BTreeMap<MetonymyCategory, CategoryCounts>,
    /// Instances without a category.
    pub uncategorized: CategoryCounts,
    pub total: CategoryCounts,
}

/// ConMeC's published label distribution: (category, metonymic, non-metonymic).
pub const CONMEC_DISTRIBUTION: [(MetonymyCategory, usize, usize); 6] = [
    (MetonymyCategory::Container, 226, 774),
    (MetonymyCategory::Producer, 129, 871),
    (MetonymyCategory::Product, 406, 594),
    (MetonymyCategory::Location, 454, 546),
    (MetonymyCategory::Causer, 317, 683),
    (MetonymyCategory::Possessed, 183, 817),
];

pub fn dataset_stats(d: &Dataset) -> DatasetStats {
    let mut stats = DatasetStats::default();
    for c in MetonymyCategory::ALL {
        stats.per_category.insert(c, CategoryCounts::default());
    }
    for inst in &d.instances {
        match inst.category {
            Some(c) => stats.per_category.entry(c).or_default().add(inst.gold),
            None => stats.uncategorized.add(inst.gold),
        }
        stats.total.add(inst.gold);
    }
    stats
}

impl DatasetStats {
    pub fn row(&self, c: MetonymyCategory) -> CategoryCounts {
        self.per_category.get(&c).copied().unwrap_or_default()
    }

    /// Compares against the published ConMeC distribution; returns every mismatch.
    pub fn verify_conmec(&self) -> Result<(), Vec<String>> {
        let mut problems = Vec::new();
        for (c, met, non) in CONMEC_DISTRIBUTION {
            let row = self.row(c);
            if (row.metonymic, row.non_metonymic, row.unlabeled) != (met, non, 0) {
                problems.push(format!(
                    "{c}: got ({}, {}, {}), expected ({met}, {non}, 0)",
                    row.metonymic, row.non_metonymic, row.unlabeled
                ));
            }
        }
        if self.uncategorized.total() != 0 {
            problems.push(format!("{} uncategorized instances", self.uncategorized.total()));
        }
        if (self.total.metonymic, self.total.non_metonymic) != (1715, 4285) {
            problems.push(format!(
                "total: got ({}, {}), expected (1715, 4285)",
                self.total.metonymic, self.total.non_metonymic
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems)
        }
    }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<14}{:>11}{:>15}{:>11}",
            "category", "metonymic", "non-metonymic", "unlabeled"
        )?;
        let line = |f: &mut fmt::Formatter<'_>, name: &str, c: &CategoryCounts| {
            writeln!(
                f,
                "{:<14}{:>11}{:>15}{:>11}",
                name, c.metonymic, c.non_metonymic, c.unlabeled
            )
        };
        for (c, counts) in &self.per_category {
            line(f, c.as_str(), counts)?;
        }
        if self.uncategorized.total() > 0 {
            line(f, "(none)", &self.uncategorized)?;
        }
        line(f, "total", &self.total)
    }
}
