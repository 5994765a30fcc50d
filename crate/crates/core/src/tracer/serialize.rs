//! The special-token trace text format.
//!
//! ```text
//! <|frame_sep|><|call_sep|>{state}<|action_sep|>def f(a,b):\n
//! <|frame_sep|><|line_sep|>{state}<|action_sep|>    y = a\n
//! <|frame_sep|><|return_sep|><|action_sep|>    return y\n<|arg_sep|>"6"
//! <|frame_sep|>
//! ```
//!
//! States are JSON objects whose values are renderings; a value equal to the
//! previous snapshot of the same frame is written as `".."`.

use std::collections::HashMap;

use thiserror::Error;

use super::{Binding, EventKind, TraceDocument, TraceEvent};
use crate::value::json_string;

pub const FRAME_SEP: &str = "<|frame_sep|>";
pub const ACTION_SEP: &str = "<|action_sep|>";
pub const ARG_SEP: &str = "<|arg_sep|>";
/// Marker for a binding whose value did not change.
pub const UNCHANGED: &str = "..";

/// Every special token of the trace format.
pub const SPECIAL_TOKENS: &[&str] = &[
    "<|trace_context_start|>",
    FRAME_SEP,
    "<|call_sep|>",
    "<|line_sep|>",
    "<|return_sep|>",
    "<|exception_sep|>",
    ACTION_SEP,
    ARG_SEP,
];

/// Anything that can count tokens of a text.
pub trait TokenCounter {
    fn count_tokens(&self, text: &str) -> usize;
}

impl<F: Fn(&str) -> usize> TokenCounter for F {
    fn count_tokens(&self, text: &str) -> usize {
        self(text)
    }
}

/// Compresses `curr` against the previous snapshot of the same frame.
pub fn snapshot_diff(prev: Option<&[Binding]>, curr: &[Binding]) -> Vec<Binding> {
    curr.iter()
        .map(|(name, value)| {
            let same = prev
                .and_then(|p| p.iter().find(|(n, _)| n == name))
                .is_some_and(|(_, v)| v == value);
            let shown = if same { UNCHANGED.to_string() } else { value.clone() };
            (name.clone(), shown)
        })
        .collect()
}

/// `{"a": "1", "b": ".."}`
pub fn render_state(bindings: &[Binding]) -> String {
    let body: Vec<String> = bindings
        .iter()
        .map(|(k, v)| format!("{}: {}", json_string(k), json_string(v)))
        .collect();
    format!("{{{}}}", body.join(", "))
}

/// One text chunk per event. Each chunk starts with `<|frame_sep|>`.
pub fn event_chunks(events: &[TraceEvent]) -> Vec<String> {
    let mut last: HashMap<usize, &[Binding]> = HashMap::new();
    events
        .iter()
        .map(|ev| {
            let mut s = String::from(FRAME_SEP);
            s.push_str(ev.kind.token());
            match ev.kind {
                EventKind::Call | EventKind::Line => {
                    let shown = snapshot_diff(last.get(&ev.frame_id).copied(), &ev.snapshot);
                    last.insert(ev.frame_id, &ev.snapshot);
                    s.push_str(&render_state(&shown));
                    s.push_str(ACTION_SEP);
                    s.push_str(&ev.action_line);
                    s.push('\n');
                }
                EventKind::Return | EventKind::Exception => {
                    last.remove(&ev.frame_id);
                    s.push_str(ACTION_SEP);
                    s.push_str(&ev.action_line);
                    s.push('\n');
                    s.push_str(ARG_SEP);
                    s.push_str(&json_string(ev.payload.as_deref().unwrap_or("None")));
                }
            }
            s
        })
        .collect()
}

/// Events visible in the serialization: those before `truncated_at`.
pub fn revealed_events(doc: &TraceDocument) -> &[TraceEvent] {
    let n = doc.truncated_at.unwrap_or(doc.events.len()).min(doc.events.len());
    &doc.events[..n]
}

pub fn serialize_events(events: &[TraceEvent]) -> String {
    let mut out = event_chunks(events).concat();
    out.push_str(FRAME_SEP);
    out
}

/// Serializes the revealed part of a trace, ending with `<|frame_sep|>`.
pub fn serialize_trace(doc: &TraceDocument) -> String {
    serialize_events(revealed_events(doc))
}

pub fn trace_token_cost(doc: &TraceDocument, tok: &dyn TokenCounter) -> usize {
    tok.count_tokens(&serialize_trace(doc))
}

/// Index of the first event whose inclusion makes the serialization cost
/// more than `budget` tokens. Chunks begin with a special token, so their
/// costs add up.
pub(crate) fn budget_cutoff(doc: &TraceDocument, budget: usize, tok: &dyn TokenCounter) -> Option<usize> {
    let mut total = tok.count_tokens(FRAME_SEP);
    for (i, chunk) in event_chunks(&doc.events).iter().enumerate() {
        total += tok.count_tokens(chunk);
        if total > budget {
            return Some(i);
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedEvent {
    pub kind: EventKind,
    /// State as written, possibly containing `".."`.
    pub state: Vec<Binding>,
    pub action_line: String,
    /// Decoded return/exception rendering.
    pub payload: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceParseError {
    #[error("trace must start and end with <|frame_sep|>")]
    Framing,
    #[error("event {index}: {message}")]
    Event { index: usize, message: String },
}

fn event_err(index: usize, message: impl Into<String>) -> TraceParseError {
    TraceParseError::Event { index, message: message.into() }
}

fn parse_state(text: &str, index: usize) -> Result<Vec<Binding>, TraceParseError> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| event_err(index, format!("bad state: {e}")))?;
    let obj = v.as_object().ok_or_else(|| event_err(index, "state is not an object"))?;
    obj.iter()
        .map(|(k, v)| match v {
            serde_json::Value::String(s) => Ok((k.clone(), s.clone())),
            _ => Err(event_err(index, format!("value of {k} is not a string"))),
        })
        .collect()
}

/// Parses trace text back into events.
pub fn parse_trace(text: &str) -> Result<Vec<ParsedEvent>, TraceParseError> {
    let body = text
        .strip_prefix("<|trace_context_start|>")
        .unwrap_or(text)
        .strip_suffix(FRAME_SEP)
        .ok_or(TraceParseError::Framing)?;
    if body.is_empty() {
        return Ok(Vec::new());
    }
    let body = body.strip_prefix(FRAME_SEP).ok_or(TraceParseError::Framing)?;
    let mut out = Vec::new();
    for (index, chunk) in body.split(FRAME_SEP).enumerate() {
        let kind = [EventKind::Call, EventKind::Line, EventKind::Return, EventKind::Exception]
            .into_iter()
            .find(|k| chunk.starts_with(k.token()))
            .ok_or_else(|| event_err(index, "unknown event token"))?;
        let rest = &chunk[kind.token().len()..];
        let (head, tail) = rest
            .split_once(ACTION_SEP)
            .ok_or_else(|| event_err(index, "missing <|action_sep|>"))?;
        match kind {
            EventKind::Call | EventKind::Line => {
                let action = tail
                    .strip_suffix('\n')
                    .ok_or_else(|| event_err(index, "action line must end with a newline"))?;
                out.push(ParsedEvent {
                    kind,
                    state: parse_state(head, index)?,
                    action_line: action.to_string(),
                    payload: None,
                });
            }
            EventKind::Return | EventKind::Exception => {
                if !head.is_empty() {
                    return Err(event_err(index, "unexpected state on a closing event"));
                }
                let (action, arg) = tail
                    .split_once(&format!("\n{ARG_SEP}"))
                    .ok_or_else(|| event_err(index, "missing <|arg_sep|>"))?;
                let payload: String =
                    serde_json::from_str(arg).map_err(|e| event_err(index, format!("bad payload: {e}")))?;
                out.push(ParsedEvent {
                    kind,
                    state: Vec::new(),
                    action_line: action.to_string(),
                    payload: Some(payload),
                });
            }
        }
    }
    Ok(out)
}

/// Rebuilds full snapshots by resolving every `".."` from the history of
/// its frame. Frames are tracked with a stack: calls push, returns and
/// exceptions pop.
pub fn expand_snapshots(events: &[ParsedEvent]) -> Result<Vec<Vec<Binding>>, TraceParseError> {
    let mut stack: Vec<Vec<Binding>> = Vec::new();
    let mut out = Vec::with_capacity(events.len());
    for (i, ev) in events.iter().enumerate() {
        match ev.kind {
            EventKind::Call | EventKind::Line => {
                if ev.kind == EventKind::Call {
                    stack.push(Vec::new());
                }
                let prev = stack.last().ok_or_else(|| event_err(i, "line event outside any frame"))?;
                let mut full = Vec::with_capacity(ev.state.len());
                for (name, value) in &ev.state {
                    if value == UNCHANGED {
                        let old = prev
                            .iter()
                            .find(|(n, _)| n == name)
                            .ok_or_else(|| event_err(i, format!("{name} marked unchanged but never seen")))?;
                        full.push((name.clone(), old.1.clone()));
                    } else {
                        full.push((name.clone(), value.clone()));
                    }
                }
                *stack.last_mut().expect("frame") = full.clone();
                out.push(full);
            }
            EventKind::Return | EventKind::Exception => {
                stack.pop().ok_or_else(|| event_err(i, "closing event without an open frame"))?;
                out.push(Vec::new());
            }
        }
    }
    Ok(out)
}
