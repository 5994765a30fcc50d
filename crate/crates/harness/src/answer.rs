//! Pulling the answer out of a completion.

use serde::{Deserialize, Serialize};
use tracebench_core::benchgen::VAR_NAMES;
use tracebench_core::minipy::literal_eval;
use tracebench_core::Value;

use crate::endpoint::{Completion, FinishReason};
use crate::prompt::PromptKind;
use crate::s5trace::read_s5_trace;
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub enum ParsedAnswer {
    Value(Value),
    /// No answer and the completion ran out of tokens.
    Truncated,
}

/// What to score in an s5 trace completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum S5Extraction {
    /// The whole final assignment as a tuple.
    #[default]
    LastState,
    /// Only the variable printed at the end.
    PrintedValue,
}

pub fn parse_answer(
    kind: PromptKind,
    completion: &Completion,
    extraction: S5Extraction,
) -> Result<ParsedAnswer, HarnessError> {
    let found = match kind {
        PromptKind::Cruxeval | PromptKind::Humaneval | PromptKind::Composition => tagged_answer(&completion.text)?,
        PromptKind::S5Chat => assignment_line(&completion.text),
        PromptKind::S5Cwm => s5_trace_answer(&completion.text, extraction)?,
    };
    match found {
        Some(v) => Ok(ParsedAnswer::Value(v)),
        None if completion.finish_reason == FinishReason::Length => Ok(ParsedAnswer::Truncated),
        None => Err(HarnessError::ParseFailure(format!("no {kind} answer in completion"))),
    }
}

/// `Ok(None)` when the tags are missing; an error when they are present but
/// hold no literal.
fn tagged_answer(text: &str) -> Result<Option<Value>, HarnessError> {
    let Some(open) = text.rfind("[ANSWER]") else { return Ok(None) };
    let body = &text[open + "[ANSWER]".len()..];
    let Some(close) = body.find("[/ANSWER]") else { return Ok(None) };
    let body = body[..close].trim();
    let line = body.lines().find(|l| l.trim_start().starts_with("assert")).unwrap_or(body).trim();
    // the call itself may contain `==` inside a string, so try each split
    let mut from = 0;
    while let Some(at) = line[from..].find("==") {
        let rhs = line[from + at + 2..].trim();
        if let Ok(v) = literal_eval(rhs) {
            return Ok(Some(v));
        }
        from += at + 2;
    }
    match literal_eval(line) {
        Ok(v) if !line.starts_with("assert") => Ok(Some(v)),
        _ => Err(HarnessError::ParseFailure(format!("no literal in answer block {line:?}"))),
    }
}

/// Last line of the form `a=4,b=5,c=2,d=1,e=3`.
fn assignment_line(text: &str) -> Option<Value> {
    text.lines().rev().find_map(|line| {
        let line = line.trim();
        let line = line.strip_prefix("Answer:").map(str::trim).unwrap_or(line);
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() < 2 || parts.len() > VAR_NAMES.len() {
            return None;
        }
        let values: Option<Vec<Value>> = parts
            .iter()
            .zip(VAR_NAMES)
            .map(|(p, name)| {
                let (k, v) = p.split_once('=')?;
                (k.trim() == name).then_some(())?;
                v.trim().parse::<i64>().ok().map(Value::int)
            })
            .collect();
        values.map(Value::Tuple)
    })
}

fn s5_trace_answer(text: &str, extraction: S5Extraction) -> Result<Option<Value>, HarnessError> {
    let reading = read_s5_trace(text).map_err(|e| HarnessError::ParseFailure(e.to_string()))?;
    if !reading.terminal {
        return Ok(None);
    }
    let value = match extraction {
        S5Extraction::LastState => reading
            .last_state(reading.n_vars())
            .map(|s| Value::Tuple(s.into_iter().map(Value::int).collect())),
        S5Extraction::PrintedValue => reading.printed().map(|(_, v)| Value::int(v)),
    };
    value
        .map(Some)
        .ok_or_else(|| HarnessError::ParseFailure("trace ended without a final state".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn done(text: &str) -> Completion {
        Completion { text: text.into(), finish_reason: FinishReason::Stop }
    }

    fn cut(text: &str) -> Completion {
        Completion { text: text.into(), finish_reason: FinishReason::Length }
    }

    fn parse(kind: PromptKind, c: &Completion) -> Result<ParsedAnswer, HarnessError> {
        parse_answer(kind, c, S5Extraction::LastState)
    }

    #[test]
    fn answer_block() {
        let c = done("trace...\n[ANSWER]\nassert f(1,3) == 6\n[/ANSWER]");
        assert_eq!(parse(PromptKind::Humaneval, &c).unwrap(), ParsedAnswer::Value(Value::int(6)));
        let c = done("[ANSWER]\nassert f('a==b') == 'x=='\n[/ANSWER]");
        assert_eq!(parse(PromptKind::Cruxeval, &c).unwrap(), ParsedAnswer::Value(Value::str("x==")));
        let c = done("[ANSWER]\nassert main_solution(\"ab\") == [-2, 4, -4]\n[/ANSWER]");
        let ParsedAnswer::Value(v) = parse(PromptKind::Composition, &c).unwrap() else { panic!() };
        assert_eq!(v.repr(), "[-2, 4, -4]");
    }

    #[test]
    fn missing_tags() {
        assert_eq!(parse(PromptKind::Cruxeval, &cut("<|frame_sep|>...")).unwrap(), ParsedAnswer::Truncated);
        assert!(matches!(parse(PromptKind::Cruxeval, &done("no idea")), Err(HarnessError::ParseFailure(_))));
        assert_eq!(parse(PromptKind::Cruxeval, &cut("[ANSWER]\nassert f(1) ==")).unwrap(), ParsedAnswer::Truncated);
        assert!(parse(PromptKind::Cruxeval, &done("[ANSWER]\nassert f(1) == g(2)\n[/ANSWER]")).is_err());
    }

    #[test]
    fn chat_line() {
        let c = done("a=4,b=5,c=2,d=1,e=3");
        let want = Value::Tuple([4, 5, 2, 1, 3].into_iter().map(Value::int).collect());
        assert_eq!(parse(PromptKind::S5Chat, &c).unwrap(), ParsedAnswer::Value(want.clone()));
        let c = done("Let me think.\nAnswer: a=4, b=5, c=2, d=1, e=3\n");
        assert_eq!(parse(PromptKind::S5Chat, &c).unwrap(), ParsedAnswer::Value(want));
        assert!(parse(PromptKind::S5Chat, &done("a=4,c=5")).is_err());
    }
}
