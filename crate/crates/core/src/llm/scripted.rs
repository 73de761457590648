use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ChatBackend, ChatRequest, ChatResponse, LlmError, LlmErrorKind, ResponseSource};

/// Answers `responses[vote_index % len]` when `pattern` (and every entry of
/// `also`) occurs in the request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptRule {
    pub pattern: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub also: Vec<String>,
    pub responses: Vec<String>,
}

impl ScriptRule {
    pub fn new(pattern: impl Into<String>, response: impl Into<String>) -> Self {
        ScriptRule {
            pattern: pattern.into(),
            also: Vec::new(),
            responses: vec![response.into()],
        }
    }

    pub fn cycle(pattern: impl Into<String>, responses: Vec<String>) -> Self {
        ScriptRule {
            pattern: pattern.into(),
            also: Vec::new(),
            responses,
        }
    }

    /// Additionally require `pattern` to be present.
    pub fn and(mut self, pattern: impl Into<String>) -> Self {
        self.also.push(pattern.into());
        self
    }

    fn matches(&self, transcript_lower: &str) -> bool {
        std::iter::once(&self.pattern)
            .chain(&self.also)
            .all(|p| transcript_lower.contains(&p.to_lowercase()))
    }
}

/// Deterministic backend driven by substring rules.
///
/// Patterns are matched case-insensitively against the concatenated message
/// contents; the first matching rule wins. With no match, the `default`
/// responses are used if present, otherwise the call fails.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScriptedBackend {
    pub rules: Vec<ScriptRule>,
    #[serde(default)]
    pub default: Vec<String>,
}

impl ScriptedBackend {
    pub fn new(rules: Vec<ScriptRule>) -> Self {
        ScriptedBackend {
            rules,
            default: Vec::new(),
        }
    }

    pub fn with_default(mut self, response: impl Into<String>) -> Self {
        self.default = vec![response.into()];
        self
    }

    pub fn from_json_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    fn answer(&self, req: &ChatRequest) -> Option<&str> {
        let transcript = req.transcript().to_lowercase();
        let pick = |rs: &'_ [String]| -> Option<usize> { (!rs.is_empty()).then(|| req.vote_index as usize % rs.len()) };
        for rule in &self.rules {
            if rule.matches(&transcript) {
                if let Some(i) = pick(&rule.responses) {
                    return Some(&rule.responses[i]);
                }
            }
        }
        pick(&self.default).map(|i| self.default[i].as_str())
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        req.validate()
            .map_err(|m| LlmError::new(req, LlmErrorKind::InvalidRequest(m)))?;
        let text = self
            .answer(req)
            .ok_or_else(|| LlmError::new(req, LlmErrorKind::ScriptMiss))?;
        Ok(ChatResponse {
            text: text.to_string(),
            truncated: false,
            latency: Duration::ZERO,
            source: ResponseSource::Scripted,
        })
    }

    fn describe(&self) -> String {
        format!("scripted({} rules)", self.rules.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::Message;

    fn req(text: &str, vote: u32) -> ChatRequest {
        ChatRequest {
            model: "script".into(),
            messages: vec![Message::user(text)],
            temperature: 0.4,
            top_p: 0.9,
            max_tokens: 64,
            vote_index: vote,
        }
    }

    #[test]
    fn pattern_match() {
        let b = ScriptedBackend::new(vec![ScriptRule::new("category of the target word", "CONTAINER")]);
        let r = b
            .complete(&req("What is the Category of the target word glass?", 0))
            .unwrap();
        assert_eq!(r.text, "CONTAINER");
        assert_eq!(r.source, ResponseSource::Scripted);
        let err = b.complete(&req("unrelated", 0)).unwrap_err();
        assert!(matches!(err.kind, LlmErrorKind::ScriptMiss));
    }

    #[test]
    fn cycles_by_vote_index_and_is_pure() {
        let b = ScriptedBackend::new(vec![ScriptRule::cycle("x", vec!["a".into(), "b".into()])]).with_default("d");
        let texts: Vec<String> = (0..4).map(|v| b.complete(&req("x", v)).unwrap().text).collect();
        assert_eq!(texts, ["a", "b", "a", "b"]);
        assert_eq!(b.complete(&req("y", 3)).unwrap().text, "d");
        assert_eq!(b.complete(&req("x", 1)).unwrap(), b.complete(&req("x", 1)).unwrap());
    }

    #[test]
    fn json_roundtrip() {
        let text = r#"{"rules":[{"pattern":"p","responses":["r1","r2"]}]}"#;
        let b: ScriptedBackend = serde_json::from_str(text).unwrap();
        assert_eq!(b.rules[0].responses.len(), 2);
        assert!(b.default.is_empty());
    }

    #[test]
    fn conjunctive_rules() {
        let b = ScriptedBackend::new(vec![
            ScriptRule::new("Final answer", "Final answer: METONYMIC").and("the glass"),
            ScriptRule::new("Final answer", "Final answer: LITERAL"),
        ]);
        assert_eq!(
            b.complete(&req("He sips the glass. Final answer", 0)).unwrap().text,
            "Final answer: METONYMIC"
        );
        assert_eq!(
            b.complete(&req("He sips the mug. Final answer", 0)).unwrap().text,
            "Final answer: LITERAL"
        );
    }
}
