//! Differential execution of original and transformed programs.

use serde::{Deserialize, Serialize};

use crate::minipy::SourceProgram;
use crate::tracer::{
    call_function, execute_traced, trace_token_cost, Outcome, TokenCounter, TraceError, DEFAULT_STEP_CEILING,
};
use crate::value::Value;

/// Generous: expanded string loops take one step per character.
pub const VERIFY_STEP_CEILING: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseVerdict {
    Equal,
    SameException,
    Mismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseReport {
    /// Arguments as Python source.
    pub input: String,
    pub original: String,
    pub transformed: String,
    pub verdict: CaseVerdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub function: String,
    pub cases: Vec<CaseReport>,
    pub passed: bool,
}

impl EquivalenceReport {
    pub fn mismatches(&self) -> impl Iterator<Item = &CaseReport> {
        self.cases.iter().filter(|c| c.verdict == CaseVerdict::Mismatch)
    }
}

fn run(program: &SourceProgram, function: &str, args: &[Value]) -> Result<Outcome, TraceError> {
    call_function(program, function, args, VERIFY_STEP_CEILING)
}

fn describe(r: &Result<Outcome, TraceError>) -> String {
    match r {
        Ok(o) => o.to_string(),
        Err(e) => format!("error: {e}"),
    }
}

fn verdict(a: &Result<Outcome, TraceError>, b: &Result<Outcome, TraceError>) -> CaseVerdict {
    match (a, b) {
        (Ok(Outcome::Returned(x)), Ok(Outcome::Returned(y))) if x.repr() == y.repr() => CaseVerdict::Equal,
        (Ok(Outcome::Raised { kind: x, .. }), Ok(Outcome::Raised { kind: y, .. })) if x == y => {
            CaseVerdict::SameException
        }
        _ => CaseVerdict::Mismatch,
    }
}

/// Calls `function` in both programs on every argument list. Passes iff
/// every case returns the same value or raises the same exception type.
pub fn verify_equivalence(
    original: &SourceProgram,
    transformed: &SourceProgram,
    function: &str,
    inputs: &[Vec<Value>],
) -> EquivalenceReport {
    let cases: Vec<CaseReport> = inputs
        .iter()
        .map(|args| {
            let a = run(original, function, args);
            let b = run(transformed, function, args);
            CaseReport {
                input: args.iter().map(Value::repr).collect::<Vec<_>>().join(", "),
                original: describe(&a),
                transformed: describe(&b),
                verdict: verdict(&a, &b),
            }
        })
        .collect();
    let passed = cases.iter().all(|c| c.verdict != CaseVerdict::Mismatch);
    EquivalenceReport { function: function.to_string(), cases, passed }
}

/// Token cost of the transformed trace over the original's.
pub fn trace_inflation(
    original: &SourceProgram,
    transformed: &SourceProgram,
    entry_call: &str,
    tok: &dyn TokenCounter,
) -> Result<f64, TraceError> {
    let a = execute_traced(original, entry_call, DEFAULT_STEP_CEILING)?;
    let b = execute_traced(transformed, entry_call, DEFAULT_STEP_CEILING)?;
    Ok(trace_token_cost(&b, tok) as f64 / trace_token_cost(&a, tok).max(1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InflationReport {
    pub original_tokens: usize,
    pub transformed_tokens: usize,
    pub ratio: f64,
    pub budget: usize,
    pub original_truncated: bool,
    pub transformed_truncated: bool,
}

/// [`trace_inflation`] plus whether each trace fits `budget` tokens.
pub fn inflation_under_budget(
    original: &SourceProgram,
    transformed: &SourceProgram,
    entry_call: &str,
    tok: &dyn TokenCounter,
    budget: usize,
) -> Result<InflationReport, TraceError> {
    let a = execute_traced(original, entry_call, DEFAULT_STEP_CEILING)?;
    let b = execute_traced(transformed, entry_call, DEFAULT_STEP_CEILING)?;
    let original_tokens = trace_token_cost(&a, tok);
    let transformed_tokens = trace_token_cost(&b, tok);
    Ok(InflationReport {
        original_tokens,
        transformed_tokens,
        ratio: transformed_tokens as f64 / original_tokens.max(1) as f64,
        budget,
        original_truncated: !a.with_token_budget(budget, tok).completed(),
        transformed_truncated: !b.with_token_budget(budget, tok).completed(),
    })
}
