//! Whole-token matching of target words inside sentences.
//!
//! A token is a maximal run of alphabetic characters, where a hyphen is kept
//! when it sits between two alphabetic characters (`Yiddish-speaking` is one
//! token, `--` is not). Matching is a case-insensitive surface comparison.

use thiserror::Error;

/// Character (not byte) offsets of a token, `end` exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TargetSpan {
    pub start: usize,
    pub end: usize,
}

impl TargetSpan {
    /// The spanned text of `sentence`.
    pub fn slice<'a>(&self, sentence: &'a str) -> &'a str {
        let (b0, b1) = byte_range(sentence, self.start, self.end);
        &sentence[b0..b1]
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LocateError {
    #[error("target {target:?} occurs {found} time(s); occurrence index {requested} is out of range")]
    OccurrenceOutOfRange {
        target: String,
        found: usize,
        requested: usize,
    },
}

/// A token with both char and byte offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Token {
    pub char_start: usize,
    pub char_end: usize,
    pub byte_start: usize,
    pub byte_end: usize,
}

/// Splits `text` into tokens under the alphabetic-run rule.
pub(crate) fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].1.is_alphabetic() {
            i += 1;
            continue;
        }
        let start = i;
        let mut j = i + 1;
        while j < chars.len() {
            let c = chars[j].1;
            if c.is_alphabetic() {
                j += 1;
            } else if c == '-' && j + 1 < chars.len() && chars[j + 1].1.is_alphabetic() {
                j += 2;
            } else {
                break;
            }
        }
        let byte_end = chars.get(j).map_or(text.len(), |&(b, _)| b);
        out.push(Token {
            char_start: start,
            char_end: j,
            byte_start: chars[start].0,
            byte_end,
        });
        i = j;
    }
    out
}

/// All whole-token, case-insensitive occurrences of `target` in `sentence`.
pub fn find_occurrences(sentence: &str, target: &str) -> Vec<TargetSpan> {
    let needle = target.to_lowercase();
    tokenize(sentence)
        .into_iter()
        .filter(|t| sentence[t.byte_start..t.byte_end].to_lowercase() == needle)
        .map(|t| TargetSpan {
            start: t.char_start,
            end: t.char_end,
        })
        .collect()
}

/// Span of the `occurrence`-th (0-based) match of `target` in `sentence`.
pub fn locate(sentence: &str, target: &str, occurrence: usize) -> Result<TargetSpan, LocateError> {
    let found = find_occurrences(sentence, target);
    found.get(occurrence).copied().ok_or(LocateError::OccurrenceOutOfRange {
        target: target.to_string(),
        found: found.len(),
        requested: occurrence,
    })
}

fn byte_range(s: &str, start: usize, end: usize) -> (usize, usize) {
    let mut b0 = s.len();
    let mut b1 = s.len();
    for (ci, (bi, _)) in s.char_indices().enumerate() {
        if ci == start {
            b0 = bi;
        }
        if ci == end {
            b1 = bi;
            break;
        }
    }
    (b0, b1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn final_token() {
        let s = "the man sips the glass";
        let span = locate(s, "glass", 0).unwrap();
        assert_eq!(span, TargetSpan { start: 17, end: 22 });
        assert_eq!(span.slice(s), "glass");
    }

    #[test]
    fn second_stadium() {
        let s = "They will be flown into the stadium with helicopters when a full stadium is cheering for them when they arrive.";
        let first = locate(s, "stadium", 0).unwrap();
        let second = locate(s, "stadium", 1).unwrap();
        assert!(second.start > first.start);
        assert_eq!(second.slice(s), "stadium");
        assert_eq!(
            &s[..second.start],
            "They will be flown into the stadium with helicopters when a full "
        );
    }

    #[test]
    fn out_of_range() {
        let err = locate("Glass of glass beads", "glass", 2).unwrap_err();
        assert_eq!(
            err,
            LocateError::OccurrenceOutOfRange {
                target: "glass".into(),
                found: 2,
                requested: 2
            }
        );
    }

    #[test]
    fn hyphen_and_partial_words() {
        let s = "a Yiddish-speaking metropolis, glasses and glass-blowers -- glass";
        assert_eq!(find_occurrences(s, "glass").len(), 1);
        assert_eq!(find_occurrences(s, "yiddish-speaking").len(), 1);
        assert_eq!(find_occurrences(s, "speaking").len(), 0);
    }

    #[test]
    fn non_ascii_offsets_are_chars() {
        let s = "café glass";
        let span = locate(s, "GLASS", 0).unwrap();
        assert_eq!(span, TargetSpan { start: 5, end: 10 });
        assert_eq!(span.slice(s), "glass");
    }
}
