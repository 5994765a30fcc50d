//! Tracing interpreter for MiniPy.
//!
//! [`execute_traced`] runs an entry call and records one event per function
//! call, executed line, return and exception, each line event carrying the
//! frame's local state. [`serialize_trace`] renders the record in the
//! special-token trace format.

mod builtins;
mod format;
mod interp;
mod methods;
mod obj;
mod ops;
pub mod serialize;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minipy::{ParseError, SourceProgram};
use crate::value::Value;

pub use serialize::{
    expand_snapshots, parse_trace, serialize_trace, snapshot_diff, trace_token_cost, ParsedEvent,
    TraceParseError, TokenCounter, UNCHANGED,
};

/// Default interpreter step ceiling.
pub const DEFAULT_STEP_CEILING: usize = 10_000;
/// Default serialization budget in tokens.
pub const DEFAULT_TOKEN_BUDGET: usize = 8192;
/// Maximum call depth before `RecursionError`.
pub const DEFAULT_MAX_DEPTH: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Call,
    Line,
    Return,
    Exception,
}

impl EventKind {
    pub fn token(self) -> &'static str {
        match self {
            EventKind::Call => "<|call_sep|>",
            EventKind::Line => "<|line_sep|>",
            EventKind::Return => "<|return_sep|>",
            EventKind::Exception => "<|exception_sep|>",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Call => "call",
            EventKind::Line => "line",
            EventKind::Return => "return",
            EventKind::Exception => "exception",
        })
    }
}

/// One `(name, rendering)` binding of a frame's locals.
pub type Binding = (String, String);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub kind: EventKind,
    pub frame_id: usize,
    /// Call depth, 0 for the entry frame.
    pub depth: usize,
    pub function: String,
    /// 1-based source line of the action.
    pub line: usize,
    /// The source line exactly as written.
    pub action_line: String,
    /// Full (uncompressed) local state for call and line events.
    pub snapshot: Vec<Binding>,
    /// Rendered return value or exception.
    pub payload: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    StepCeiling,
    TokenBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDocument {
    pub program: SourceProgram,
    pub entry_call: String,
    pub events: Vec<TraceEvent>,
    pub final_return: Option<Value>,
    /// Rendering of an exception that escaped the entry call.
    pub exception: Option<String>,
    pub stdout: String,
    pub step_count: usize,
    pub truncated_at: Option<usize>,
    pub truncation: Option<Truncation>,
}

impl TraceDocument {
    pub fn completed(&self) -> bool {
        self.truncated_at.is_none()
    }

    /// Marks the document truncated at the first event whose serialization
    /// pushes the running token count past `budget`.
    pub fn with_token_budget(mut self, budget: usize, tok: &dyn TokenCounter) -> Self {
        if self.truncated_at.is_some() {
            return self;
        }
        if let Some(idx) = serialize::budget_cutoff(&self, budget, tok) {
            self.truncated_at = Some(idx);
            self.truncation = Some(Truncation::TokenBudget);
            self.final_return = None;
        }
        self
    }

    /// JSON export with event kinds as strings.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("trace documents serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceOptions {
    pub step_ceiling: usize,
    pub max_depth: usize,
    /// Record events. When off, only the outcome is computed.
    pub record: bool,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            step_ceiling: DEFAULT_STEP_CEILING,
            max_depth: DEFAULT_MAX_DEPTH,
            record: true,
        }
    }
}

/// Result of running a call without caring about its trace.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Returned(Value),
    Raised { kind: String, message: String, rendering: String },
    StepLimit,
}

impl Outcome {
    /// Python-level agreement: equal values (by `==`) or the same exception
    /// type.
    pub fn agrees_with(&self, other: &Outcome) -> bool {
        match (self, other) {
            (Outcome::Returned(a), Outcome::Returned(b)) => a.py_eq(b),
            (Outcome::Raised { kind: a, .. }, Outcome::Raised { kind: b, .. }) => a == b,
            (Outcome::StepLimit, Outcome::StepLimit) => true,
            _ => false,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Returned(v) => write!(f, "{}", v.repr()),
            Outcome::Raised { rendering, .. } => write!(f, "raise {rendering}"),
            Outcome::StepLimit => f.write_str("step limit"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("invalid entry call `{call}`: {reason}")]
    BadEntry { call: String, reason: String },
    #[error("module initialisation raised {0}")]
    ModuleInit(String),
}

/// Runs `entry_call` (e.g. `main()` or `f(1, 3)`) and records its trace.
pub fn execute_traced(
    program: &SourceProgram,
    entry_call: &str,
    step_ceiling: usize,
) -> Result<TraceDocument, TraceError> {
    let opts = TraceOptions {
        step_ceiling,
        ..TraceOptions::default()
    };
    execute_with(program, entry_call, &opts)
}

pub fn execute_with(
    program: &SourceProgram,
    entry_call: &str,
    opts: &TraceOptions,
) -> Result<TraceDocument, TraceError> {
    let module = program.parse()?;
    let call = interp::EntryCall::parse(entry_call)?;
    let src = program.source_text.clone();
    let opts = *opts;
    let run = interp::run_isolated(move || interp::run(&module, &src, &call, &opts));
    let run = run?;
    Ok(TraceDocument {
        program: program.clone(),
        entry_call: entry_call.to_string(),
        events: run.events,
        final_return: match &run.outcome {
            Outcome::Returned(v) => Some(v.clone()),
            _ => None,
        },
        exception: match &run.outcome {
            Outcome::Raised { rendering, .. } => Some(rendering.clone()),
            _ => None,
        },
        stdout: run.stdout,
        step_count: run.steps,
        truncated_at: run.halted_at,
        truncation: run.halted_at.map(|_| Truncation::StepCeiling),
    })
}

/// Outcome and captured stdout of an untraced run.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub outcome: Outcome,
    pub stdout: String,
}

/// Runs `entry_call` without recording events.
pub fn evaluate(program: &SourceProgram, entry_call: &str, step_ceiling: usize) -> Result<Outcome, TraceError> {
    evaluate_full(program, entry_call, step_ceiling).map(|e| e.outcome)
}

pub fn evaluate_full(program: &SourceProgram, entry_call: &str, step_ceiling: usize) -> Result<Evaluation, TraceError> {
    let opts = TraceOptions {
        step_ceiling,
        record: false,
        ..TraceOptions::default()
    };
    let module = program.parse()?;
    let call = interp::EntryCall::parse(entry_call)?;
    let src = program.source_text.clone();
    let run = interp::run_isolated(move || interp::run(&module, &src, &call, &opts))?;
    Ok(Evaluation {
        outcome: run.outcome,
        stdout: run.stdout,
    })
}

/// Calls function `name` with already-built argument values, untraced.
pub fn call_function(
    program: &SourceProgram,
    name: &str,
    args: &[Value],
    step_ceiling: usize,
) -> Result<Outcome, TraceError> {
    let opts = TraceOptions {
        step_ceiling,
        record: false,
        ..TraceOptions::default()
    };
    let module = program.parse()?;
    let call = interp::EntryCall::Values {
        func: name.to_string(),
        args: args.to_vec(),
    };
    let src = program.source_text.clone();
    Ok(interp::run_isolated(move || interp::run(&module, &src, &call, &opts))?.outcome)
}

#[cfg(test)]
mod tests;
