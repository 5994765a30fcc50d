//! Evaluation pipeline for trace-prediction benchmarks: prompt templates,
//! a completion client, baseline and teacher-forcing scoring, the output
//! type taxonomy and static reports.

pub mod answer;
pub mod config;
pub mod endpoint;
pub mod eval;
pub mod intervention;
pub mod mock;
pub mod prompt;
mod prompt_text;
pub mod report;
pub mod s5trace;
pub mod taxonomy;

use std::path::PathBuf;

use thiserror::Error;

pub use answer::{parse_answer, ParsedAnswer, S5Extraction};
pub use config::EvalConfig;
pub use endpoint::{
    Completion, CompletionModel, CompletionRequest, FinishReason, HttpModel, ModelEndpoint, RetryPolicy,
};
pub use eval::{
    classify_failure, evaluate_baseline, evaluate_item, run_eval, teacher_force_eval, EvalMode, EvalRecord, EvalSettings,
    StepRecord, Variant, Verdict,
};
pub use mock::{CannedModel, CorruptingS5Model, MockServer, OracleModel};
pub use prompt::{build_prompt, Prompt, PromptKind};
pub use report::{emit_report, ReportFormat, Summary};
pub use taxonomy::{type_distribution, TaxonomyRow, TaxonomyTable};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("authentication failed (HTTP {status})")]
    AuthFailure { status: u16 },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("{kind} prompt does not fit item {item}: {reason}")]
    TemplateMismatch { kind: PromptKind, item: String, reason: String },
    #[error("could not parse answer: {0}")]
    ParseFailure(String),
    #[error("invalid endpoint: {0}")]
    InvalidEndpoint(String),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error(transparent)]
    Trace(#[from] tracebench_core::tracer::TraceError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl HarnessError {
    pub(crate) fn mismatch(kind: PromptKind, item: &str, reason: impl Into<String>) -> Self {
        HarnessError::TemplateMismatch {
            kind,
            item: item.to_string(),
            reason: reason.into(),
        }
    }
}
