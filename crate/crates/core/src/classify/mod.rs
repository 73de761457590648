//! Prompting strategies, self-consistency voting and the batch runner.
//!
//! * **Basic**: one prompt asking directly for a label.
//! * **CoT**: the general chain-of-thought prompt for every target.
//! * **CoT-2S**: a categorization call picks one of five semantic categories,
//!   then that category's chain-of-thought prompt decides the label.
//!
//! Every strategy can be repeated `n` (odd) times with distinct `vote_index`
//! values; the strict majority becomes the final label.

mod batch;
mod parse;
pub mod prompts;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Instance, MetonymyLabel, Prediction, PredictionError, SemanticCategory, Strategy, VoteRecord};
use crate::llm::{ChatBackend, ChatRequest, LlmError, Message, ResponseSource};

pub use batch::{read_traces, run_batch, BatchError, BatchOptions, BatchSummary, RunManifest};
pub use parse::{parse_category, parse_label};
pub use prompts::{PromptError, PromptSet, PromptTemplate, RenderedPrompt};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
}

/// Sampling parameters per pipeline step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub categorize: SamplingParams,
    pub classify: SamplingParams,
}

impl Default for StepParams {
    fn default() -> Self {
        StepParams {
            categorize: SamplingParams {
                temperature: 0.4,
                top_p: 0.9,
                max_tokens: 64,
            },
            classify: SamplingParams {
                temperature: 0.6,
                top_p: 0.9,
                max_tokens: 1024,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Step {
    Categorize,
    Classify,
}

/// Raw record of one model call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub instance_id: String,
    pub vote_index: u32,
    pub step: Step,
    /// 0 for the first call, 1 for the categorization retry.
    pub attempt: u32,
    pub request: ChatRequest,
    pub response: String,
    pub truncated: bool,
    pub source: ResponseSource,
    /// Parsed value, or "unparsable".
    pub parsed: String,
}

/// One vote plus the calls that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteOutcome {
    pub vote: VoteRecord,
    pub traces: Vec<StepTrace>,
    /// Categorization fell back to General after the retry.
    pub category_fallback: bool,
    /// Label came from keyword matching rather than the answer marker.
    pub keyword_fallback: bool,
}

#[derive(Debug, Error)]
pub enum ClassifyErrorKind {
    #[error(transparent)]
    Backend(#[from] LlmError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Prediction(#[from] PredictionError),
    #[error("vote count must be odd and positive, got {0}")]
    VoteCount(usize),
}

#[derive(Debug, Error)]
#[error("instance {instance_id}: {kind}")]
pub struct ClassifyError {
    pub instance_id: String,
    pub kind: ClassifyErrorKind,
    /// Calls completed before the failure.
    pub partial_traces: Vec<StepTrace>,
}

/// Self-consistency result for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceResult {
    pub prediction: Prediction,
    pub traces: Vec<StepTrace>,
    pub category_fallbacks: usize,
}

const CATEGORY_REMINDER: &str = "Answer with exactly one word: CONTAINER, PRODUCER, PRODUCT, LOCATION, or GENERAL.";

/// Runs the prompting strategies against a backend.
pub struct Classifier<'a> {
    pub backend: &'a dyn ChatBackend,
    pub prompts: &'a PromptSet,
    pub model: String,
    pub params: StepParams,
    pub with_context: bool,
}

impl<'a> Classifier<'a> {
    pub fn new(backend: &'a dyn ChatBackend, prompts: &'a PromptSet, model: impl Into<String>) -> Self {
        Classifier {
            backend,
            prompts,
            model: model.into(),
            params: StepParams::default(),
            with_context: false,
        }
    }

    pub fn with_context(mut self, on: bool) -> Self {
        self.with_context = on;
        self
    }

    fn request(&self, messages: Vec<Message>, p: SamplingParams, vote_index: u32) -> ChatRequest {
        ChatRequest {
            model: self.model.clone(),
            messages,
            temperature: p.temperature,
            top_p: p.top_p,
            max_tokens: p.max_tokens,
            vote_index,
        }
    }

    fn render(&self, t: &PromptTemplate, inst: &Instance) -> Result<String, PromptError> {
        let r = t.render(inst, self.with_context)?;
        for w in &r.warnings {
            log::warn!("{w}");
        }
        Ok(r.text)
    }

    fn fail(inst: &Instance, kind: impl Into<ClassifyErrorKind>, traces: Vec<StepTrace>) -> ClassifyError {
        ClassifyError {
            instance_id: inst.id.clone(),
            kind: kind.into(),
            partial_traces: traces,
        }
    }

    /// One label-producing call with `template`.
    fn label_step(
        &self,
        inst: &Instance,
        template: &PromptTemplate,
        vote_index: u32,
        mut traces: Vec<StepTrace>,
        category: Option<SemanticCategory>,
        category_fallback: bool,
    ) -> Result<VoteOutcome, ClassifyError> {
        let prompt = match self.render(template, inst) {
            Ok(p) => p,
            Err(e) => return Err(Self::fail(inst, e, traces)),
        };
        let req = self.request(vec![Message::user(prompt)], self.params.classify, vote_index);
        let resp = match self.backend.complete(&req) {
            Ok(r) => r,
            Err(e) => return Err(Self::fail(inst, e, traces)),
        };
        let parsed = parse_label(&resp.text);
        let (label, parse_failed, keyword_fallback) = match parsed {
            Some((label, fallback)) => (label, false, fallback),
            None => {
                log::warn!(
                    "instance {} vote {vote_index}: no label in completion, defaulting to non-metonymic",
                    inst.id
                );
                (MetonymyLabel::NonMetonymic, true, false)
            }
        };
        traces.push(StepTrace {
            instance_id: inst.id.clone(),
            vote_index,
            step: Step::Classify,
            attempt: 0,
            request: req,
            response: resp.text,
            truncated: resp.truncated,
            source: resp.source,
            parsed: match parsed {
                Some((l, _)) => l.prediction_str().to_string(),
                None => "unparsable".to_string(),
            },
        });
        Ok(VoteOutcome {
            vote: VoteRecord {
                label,
                category,
                parse_failed,
                trace_ref: Some(format!("{}/{}", inst.id, vote_index)),
            },
            traces,
            category_fallback,
            keyword_fallback,
        })
    }

    pub fn classify_basic(&self, inst: &Instance, vote_index: u32) -> Result<VoteOutcome, ClassifyError> {
        self.label_step(inst, self.prompts.basic(), vote_index, Vec::new(), None, false)
    }

    pub fn classify_cot(&self, inst: &Instance, vote_index: u32) -> Result<VoteOutcome, ClassifyError> {
        self.label_step(inst, self.prompts.cot_general(), vote_index, Vec::new(), None, false)
    }

    /// Categorization step: returns the category, whether the General
    /// fallback was used, and the call traces.
    pub fn categorize(
        &self,
        inst: &Instance,
        vote_index: u32,
    ) -> Result<(SemanticCategory, bool, Vec<StepTrace>), ClassifyError> {
        let mut traces = Vec::new();
        let prompt = self
            .render(self.prompts.categorize(), inst)
            .map_err(|e| Self::fail(inst, e, Vec::new()))?;
        let mut messages = vec![Message::user(prompt)];
        for attempt in 0..2u32 {
            let req = self.request(messages.clone(), self.params.categorize, vote_index);
            let resp = self
                .backend
                .complete(&req)
                .map_err(|e| Self::fail(inst, e, traces.clone()))?;
            let parsed = parse_category(&resp.text);
            traces.push(StepTrace {
                instance_id: inst.id.clone(),
                vote_index,
                step: Step::Categorize,
                attempt,
                request: req,
                response: resp.text.clone(),
                truncated: resp.truncated,
                source: resp.source,
                parsed: parsed.map_or("unparsable".to_string(), |c| c.as_str().to_string()),
            });
            if let Some(c) = parsed {
                return Ok((c, false, traces));
            }
            // Follow-up turn so the retry is a distinct request (and cache key).
            messages.push(Message::assistant(resp.text));
            messages.push(Message::user(CATEGORY_REMINDER));
        }
        log::warn!(
            "instance {} vote {vote_index}: categorization unparsable twice, using general",
            inst.id
        );
        Ok((SemanticCategory::General, true, traces))
    }

    pub fn classify_cot2s(&self, inst: &Instance, vote_index: u32) -> Result<VoteOutcome, ClassifyError> {
        let (category, fallback, traces) = self.categorize(inst, vote_index)?;
        self.label_step(
            inst,
            self.prompts.cot2s(category),
            vote_index,
            traces,
            Some(category),
            fallback,
        )
    }

    pub fn vote(&self, strategy: Strategy, inst: &Instance, vote_index: u32) -> Result<VoteOutcome, ClassifyError> {
        match strategy {
            Strategy::Basic => self.classify_basic(inst, vote_index),
            Strategy::Cot => self.classify_cot(inst, vote_index),
            Strategy::Cot2s => self.classify_cot2s(inst, vote_index),
        }
    }

    /// `n` votes with `vote_index` 0..n, combined by strict majority.
    pub fn self_consistency(
        &self,
        inst: &Instance,
        strategy: Strategy,
        n: usize,
    ) -> Result<InstanceResult, ClassifyError> {
        if n == 0 || n.is_multiple_of(2) {
            return Err(Self::fail(inst, ClassifyErrorKind::VoteCount(n), Vec::new()));
        }
        let mut votes = Vec::with_capacity(n);
        let mut traces = Vec::new();
        let mut category_fallbacks = 0;
        for v in 0..n as u32 {
            match self.vote(strategy, inst, v) {
                Ok(outcome) => {
                    votes.push(outcome.vote);
                    traces.extend(outcome.traces);
                    category_fallbacks += usize::from(outcome.category_fallback);
                }
                Err(mut e) => {
                    let mut all = traces;
                    all.append(&mut e.partial_traces);
                    e.partial_traces = all;
                    return Err(e);
                }
            }
        }
        let prediction = Prediction::from_votes(inst.id.clone(), strategy, votes)
            .map_err(|e| Self::fail(inst, e, traces.clone()))?;
        Ok(InstanceResult {
            prediction,
            traces,
            category_fallbacks,
        })
    }
}
