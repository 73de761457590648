//! Prompt templates and rendering.

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::data::{Instance, SemanticCategory};

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("template {template}: unbound placeholder {{{name}}}")]
    UnboundPlaceholder { template: String, name: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub category: Option<SemanticCategory>,
    pub body: String,
}

/// Result of rendering, with any non-fatal notes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub text: String,
    pub warnings: Vec<String>,
}

const PLACEHOLDERS: [&str; 4] = ["sentence", "target", "context_before", "context_after"];

impl PromptTemplate {
    pub fn new(name: impl Into<String>, category: Option<SemanticCategory>, body: impl Into<String>) -> Self {
        PromptTemplate {
            name: name.into(),
            category,
            body: body.into(),
        }
    }

    pub fn placeholders(&self) -> Vec<String> {
        scan(&self.body)
            .into_iter()
            .filter_map(|piece| match piece {
                Piece::Slot(name) => Some(name.to_string()),
                Piece::Text(_) => None,
            })
            .collect()
    }

    /// Fills the template for `inst`. Substitution is single pass, so braces
    /// inside the inserted text are left alone.
    ///
    /// With `with_context`, the neighbor sentences go into `{context_before}` /
    /// `{context_after}` when the template has them. Otherwise the passage
    /// (before + sentence + after) fills `{sentence}` and a closing line names
    /// the sentence holding the target.
    pub fn render(&self, inst: &Instance, with_context: bool) -> Result<RenderedPrompt, PromptError> {
        let mut warnings = Vec::new();
        let pieces = scan(&self.body);
        for p in &pieces {
            if let Piece::Slot(name) = p {
                if !PLACEHOLDERS.contains(name) {
                    return Err(PromptError::UnboundPlaceholder {
                        template: self.name.clone(),
                        name: name.to_string(),
                    });
                }
            }
        }

        let before = inst.context_before.as_deref().filter(|s| !s.trim().is_empty());
        let after = inst.context_after.as_deref().filter(|s| !s.trim().is_empty());
        let has_context = before.is_some() || after.is_some();
        if with_context && !has_context {
            warnings.push(format!(
                "instance {}: no context sentences, rendering without context",
                inst.id
            ));
        }
        let use_context = with_context && has_context;
        let explicit_slots = pieces
            .iter()
            .any(|p| matches!(p, Piece::Slot("context_before" | "context_after")));

        let sentence_slot = if use_context && !explicit_slots {
            [before, Some(inst.sentence.as_str()), after]
                .into_iter()
                .flatten()
                .collect::<Vec<_>>()
                .join(" ")
        } else {
            inst.sentence.clone()
        };

        let mut text = String::with_capacity(self.body.len() + sentence_slot.len() + 64);
        for p in pieces {
            match p {
                Piece::Text(t) => text.push_str(t),
                Piece::Slot("sentence") => text.push_str(&sentence_slot),
                Piece::Slot("target") => text.push_str(&inst.target),
                Piece::Slot("context_before") => text.push_str(if use_context { before.unwrap_or("") } else { "" }),
                Piece::Slot("context_after") => text.push_str(if use_context { after.unwrap_or("") } else { "" }),
                Piece::Slot(_) => unreachable!("checked above"),
            }
        }
        if use_context && !explicit_slots {
            text.push_str(
                "\nThe passage above includes the neighboring sentences. The target word occurs in this sentence: ",
            );
            text.push_str(&inst.sentence);
        }
        Ok(RenderedPrompt { text, warnings })
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.body.as_bytes()))
    }
}

#[derive(Debug, PartialEq, Eq)]
enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

// Splits into literal text and `{name}` slots where name is [a-z_]+.
fn scan(body: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let name_len = after
            .bytes()
            .take_while(|b| b.is_ascii_lowercase() || *b == b'_')
            .count();
        if name_len > 0 && after.as_bytes().get(name_len) == Some(&b'}') {
            if open > 0 {
                out.push(Piece::Text(&rest[..open]));
            }
            out.push(Piece::Slot(&after[..name_len]));
            rest = &after[name_len + 1..];
        } else {
            out.push(Piece::Text(&rest[..open + 1]));
            rest = after;
        }
    }
    if !rest.is_empty() {
        out.push(Piece::Text(rest));
    }
    out
}

/// Fixed template file names.
pub const BASIC: &str = "basic.txt";
pub const COT_GENERAL: &str = "cot_general.txt";
pub const CATEGORIZE: &str = "categorize.txt";

fn cot2s_file(c: SemanticCategory) -> &'static str {
    match c {
        SemanticCategory::Container => "cot2s_container.txt",
        SemanticCategory::Producer => "cot2s_producer.txt",
        SemanticCategory::Product => "cot2s_product.txt",
        SemanticCategory::Location => "cot2s_location.txt",
        SemanticCategory::General => "cot2s_general.txt",
    }
}

const BUILTIN: [(&str, &str); 8] = [
    (BASIC, include_str!("../../prompts/basic.txt")),
    (COT_GENERAL, include_str!("../../prompts/cot_general.txt")),
    (CATEGORIZE, include_str!("../../prompts/categorize.txt")),
    ("cot2s_container.txt", include_str!("../../prompts/cot2s_container.txt")),
    ("cot2s_producer.txt", include_str!("../../prompts/cot2s_producer.txt")),
    ("cot2s_product.txt", include_str!("../../prompts/cot2s_product.txt")),
    ("cot2s_location.txt", include_str!("../../prompts/cot2s_location.txt")),
    ("cot2s_general.txt", include_str!("../../prompts/cot2s_general.txt")),
];

/// The full set of templates used by the three strategies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    templates: BTreeMap<String, PromptTemplate>,
}

impl PromptSet {
    /// Templates compiled into the binary.
    pub fn builtin() -> Self {
        let templates = BUILTIN
            .iter()
            .map(|(name, body)| (name.to_string(), make(name, body.trim_end().to_string())))
            .collect();
        PromptSet { templates }
    }

    /// Reads templates from `dir`; files that are absent keep the built-in text.
    pub fn load_dir(dir: &Path) -> Result<Self, PromptError> {
        let mut set = Self::builtin();
        for (name, _) in BUILTIN {
            let path = dir.join(name);
            match std::fs::read_to_string(&path) {
                Ok(body) => {
                    set.templates
                        .insert(name.to_string(), make(name, body.trim_end().to_string()));
                }
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                    log::warn!("{} missing, using built-in template", path.display());
                }
                Err(source) => {
                    return Err(PromptError::Io {
                        path: path.display().to_string(),
                        source,
                    })
                }
            }
        }
        Ok(set)
    }

    pub fn get(&self, name: &str) -> &PromptTemplate {
        &self.templates[name]
    }

    pub fn basic(&self) -> &PromptTemplate {
        self.get(BASIC)
    }

    pub fn cot_general(&self) -> &PromptTemplate {
        self.get(COT_GENERAL)
    }

    pub fn categorize(&self) -> &PromptTemplate {
        self.get(CATEGORIZE)
    }

    pub fn cot2s(&self, c: SemanticCategory) -> &PromptTemplate {
        self.get(cot2s_file(c))
    }

    /// SHA-256 of every template body, by file name.
    pub fn hashes(&self) -> BTreeMap<String, String> {
        self.templates.iter().map(|(k, t)| (k.clone(), t.sha256())).collect()
    }
}

fn make(name: &str, body: String) -> PromptTemplate {
    let category = SemanticCategory::ALL.into_iter().find(|c| cot2s_file(*c) == name);
    PromptTemplate::new(name, category, body)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn glass() -> Instance {
        Instance::new("g", "He sips the glass", "glass")
    }

    #[test]
    fn container_render_has_no_braces() {
        let set = PromptSet::builtin();
        let r = set.cot2s(SemanticCategory::Container).render(&glass(), false).unwrap();
        assert!(r.text.contains("He sips the glass"));
        assert!(r.text.contains("Target word: glass"));
        assert!(!r.text.contains('{') && !r.text.contains('}'));
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn every_builtin_renders_cleanly() {
        let set = PromptSet::builtin();
        let inst = glass().with_context(Some("Before.".into()), Some("After.".into()));
        for (name, _) in BUILTIN {
            for ctx in [false, true] {
                let r = set.get(name).render(&inst, ctx).unwrap();
                assert!(!r.text.contains("{sentence}") && !r.text.contains("{target}"), "{name}");
            }
        }
    }

    #[test]
    fn context_rendering() {
        let set = PromptSet::builtin();
        let inst = glass().with_context(Some("It was late.".into()), Some("Then he left.".into()));
        let r = set.cot_general().render(&inst, true).unwrap();
        assert!(r.text.contains("It was late. He sips the glass Then he left."));
        assert!(r
            .text
            .ends_with("The target word occurs in this sentence: He sips the glass"));

        let bare = glass();
        let with = set.cot_general().render(&bare, true).unwrap();
        let without = set.cot_general().render(&bare, false).unwrap();
        assert_eq!(with.text, without.text);
        assert_eq!(with.warnings.len(), 1);
    }

    #[test]
    fn explicit_context_slots() {
        let t = PromptTemplate::new("t", None, "[{context_before}] {sentence} [{context_after}] {target}");
        let inst = glass().with_context(Some("A.".into()), None);
        assert_eq!(t.render(&inst, true).unwrap().text, "[A.] He sips the glass [] glass");
        assert_eq!(t.render(&inst, false).unwrap().text, "[] He sips the glass [] glass");
    }

    #[test]
    fn unknown_placeholder_and_literal_braces() {
        let t = PromptTemplate::new("t", None, "{sentence} {label}");
        assert!(matches!(
            t.render(&glass(), false),
            Err(PromptError::UnboundPlaceholder { .. })
        ));
        let t = PromptTemplate::new("t", None, "json {\"a\": 1} {Sentence} {sentence}");
        let inst = Instance::new("b", "a {target} glass", "glass");
        assert_eq!(
            t.render(&inst, false).unwrap().text,
            "json {\"a\": 1} {Sentence} a {target} glass"
        );
    }

    #[test]
    fn load_dir_overrides() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(BASIC), "Custom {sentence} / {target}\n").unwrap();
        let set = PromptSet::load_dir(dir.path()).unwrap();
        assert_eq!(set.basic().body, "Custom {sentence} / {target}");
        assert_eq!(set.cot_general(), PromptSet::builtin().cot_general());
        assert_ne!(set.hashes()[BASIC], PromptSet::builtin().hashes()[BASIC]);
        assert_eq!(
            set.cot2s(SemanticCategory::Location).category,
            Some(SemanticCategory::Location)
        );
    }
}
