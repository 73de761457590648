//! Reading labels and categories out of free-form completions.

use std::sync::LazyLock;

use regex::Regex;

use crate::data::{MetonymyLabel, SemanticCategory};

static MARKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"(?i)final\s+answer\s*:?[\s*_"'`]*(non[-\s]?metonymic|metonymic|literal)"#).unwrap());

static LABEL_WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)non[-\s]?metonymic|metonymic|literal").unwrap());

static WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[A-Za-z]+").unwrap());

fn label_of(word: &str) -> MetonymyLabel {
    let w = word.to_ascii_lowercase();
    if w.starts_with("non") || w == "literal" {
        MetonymyLabel::NonMetonymic
    } else {
        MetonymyLabel::Metonymic
    }
}

/// Semantic category named nearest the end of the text, or `None`.
pub fn parse_category(text: &str) -> Option<SemanticCategory> {
    WORD.find_iter(text)
        .filter_map(|m| m.as_str().parse::<SemanticCategory>().ok())
        .last()
}

/// Label from a completion.
///
/// A `Final answer: X` marker decides when present (the last one, if
/// repeated). Otherwise the last mention of "metonymic" or "literal" decides
/// and the returned flag is set. `None` when neither is found.
pub fn parse_label(text: &str) -> Option<(MetonymyLabel, bool)> {
    if let Some(c) = MARKER.captures_iter(text).last() {
        return Some((label_of(&c[1]), false));
    }
    LABEL_WORD.find_iter(text).last().map(|m| (label_of(m.as_str()), true))
}
