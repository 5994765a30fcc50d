//! Scoring items against a model: the baseline protocol, teacher forcing
//! for s5, and the concurrent runner.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use tracebench_core::benchgen::{render_assignment, BenchmarkItem, ZOO_EVAL_CEILING};
use tracebench_core::minipy::literal_eval;
use tracebench_core::toklab::{default_tokenizer, is_token_subsequence};
use tracebench_core::tracer::serialize::{event_chunks, ACTION_SEP, FRAME_SEP};
use tracebench_core::tracer::{execute_traced, parse_trace, serialize_trace, EventKind, UNCHANGED};
use tracebench_core::Value;
use tracing::{debug, info};

use crate::answer::{parse_answer, ParsedAnswer, S5Extraction};
use crate::endpoint::{CompletionModel, FinishReason};
use crate::prompt::{build_prompt, Prompt, PromptKind};
use crate::s5trace::{is_op_line, read_s5_trace, state_values, S5_FUNCTION};
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Correct,
    Wrong,
    Truncated,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Correct => "correct",
            Verdict::Wrong => "wrong",
            Verdict::Truncated => "truncated",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    #[default]
    Baseline,
    TeacherForcing,
}

impl std::str::FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(EvalMode::Baseline),
            "teacher-forcing" | "teacher_forcing" | "tf" => Ok(EvalMode::TeacherForcing),
            _ => Err(format!("unknown mode `{s}` (baseline or teacher-forcing)")),
        }
    }
}

/// Which side of an intervention run a record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Original,
    Transformed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based op number.
    pub step: usize,
    /// `a=..,b=..` as predicted, if it could be read.
    pub predicted_state: Option<String>,
    pub ground_state: String,
    #[serde(rename = "match")]
    pub matches: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub item: BenchmarkItem,
    pub kind: PromptKind,
    pub mode: EvalMode,
    #[serde(default)]
    pub variant: Variant,
    pub prompt: String,
    pub completion: String,
    pub finish_reason: FinishReason,
    /// Rendering of the value the answer is compared against.
    pub expected: String,
    pub parsed_answer: Option<String>,
    pub verdict: Verdict,
    pub output_type: String,
    pub max_tokens: usize,
    pub per_step: Option<Vec<StepRecord>>,
    /// First op (1-based) whose generated action differs from the oracle.
    pub first_bad_action: Option<usize>,
    /// For wrong string answers: the expected string is in the prompt but
    /// not contiguous at the token level.
    pub discontinuity: Option<bool>,
}

impl EvalRecord {
    pub fn step_accuracy(&self) -> Option<f64> {
        let steps = self.per_step.as_ref()?;
        (!steps.is_empty()).then(|| steps.iter().filter(|s| s.matches).count() as f64 / steps.len() as f64)
    }
}

/// Type tag used by the taxonomy: Python type names, `none` for `None`.
pub fn type_tag(v: &Value) -> &'static str {
    match v {
        Value::None => "none",
        other => other.type_name(),
    }
}

/// Recomputes `(verdict, output_type)` from a record's answer fields.
pub fn classify_failure(record: &EvalRecord) -> (Verdict, String) {
    let output_type = literal_eval(&record.expected)
        .map(|v| type_tag(&v).to_string())
        .unwrap_or_else(|_| record.output_type.clone());
    let verdict = match &record.parsed_answer {
        Some(ans) => match (literal_eval(ans), literal_eval(&record.expected)) {
            (Ok(a), Ok(e)) if a.py_eq(&e) && (a.type_name() == e.type_name() || numeric(&a, &e)) => Verdict::Correct,
            _ => Verdict::Wrong,
        },
        None if record.finish_reason == FinishReason::Length => Verdict::Truncated,
        None => Verdict::Wrong,
    };
    (verdict, output_type)
}

fn numeric(a: &Value, b: &Value) -> bool {
    let num = |v: &Value| matches!(v, Value::Int(_) | Value::Float(_));
    num(a) && num(b)
}

#[derive(Debug, Clone)]
pub struct EvalSettings {
    pub mode: EvalMode,
    /// Prompt style; `None` picks the natural one per item.
    pub kind: Option<PromptKind>,
    pub extraction: S5Extraction,
    pub max_tokens: usize,
    pub jobs: usize,
    pub variant: Variant,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            mode: EvalMode::Baseline,
            kind: None,
            extraction: S5Extraction::LastState,
            max_tokens: tracebench_core::tracer::DEFAULT_TOKEN_BUDGET,
            jobs: 1,
            variant: Variant::Original,
        }
    }
}

fn expected_for(item: &BenchmarkItem, kind: PromptKind, extraction: S5Extraction) -> Value {
    match (kind, extraction, item.s5_spec()) {
        (PromptKind::S5Cwm, S5Extraction::PrintedValue, Some(spec)) => match &item.expected_output {
            Value::Tuple(xs) => xs.get(spec.query).cloned().unwrap_or(Value::None),
            other => other.clone(),
        },
        _ => item.expected_output.clone(),
    }
}

fn finish_record(mut rec: EvalRecord) -> EvalRecord {
    let (verdict, output_type) = classify_failure(&rec);
    rec.verdict = verdict;
    rec.output_type = output_type;
    if verdict == Verdict::Wrong {
        if let Ok(Value::Str(s)) = literal_eval(&rec.expected) {
            let finding = is_token_subsequence(default_tokenizer(), &s, &rec.prompt);
            rec.discontinuity = Some(finding.is_discontinuity());
        }
    }
    rec
}

/// One request, one answer.
pub fn evaluate_baseline(
    item: &BenchmarkItem,
    model: &dyn CompletionModel,
    settings: &EvalSettings,
) -> Result<EvalRecord, HarnessError> {
    let kind = settings.kind.unwrap_or_else(|| PromptKind::default_for(item));
    let prompt = build_prompt(kind, item)?;
    let completion = model.complete(&prompt, &[], settings.max_tokens)?;
    let expected = expected_for(item, kind, settings.extraction);
    let parsed = match parse_answer(kind, &completion, settings.extraction) {
        Ok(ParsedAnswer::Value(v)) => Some(v.repr()),
        Ok(ParsedAnswer::Truncated) => None,
        Err(e) => {
            debug!(item = %item.id(), error = %e, "unparseable completion");
            None
        }
    };
    let first_bad_action = match kind {
        PromptKind::S5Cwm => first_bad_action(item, &completion.text)?,
        _ => None,
    };
    Ok(finish_record(EvalRecord {
        item: item.clone(),
        kind,
        mode: EvalMode::Baseline,
        variant: settings.variant,
        prompt: prompt.flat(),
        completion: completion.text,
        finish_reason: completion.finish_reason,
        expected: expected.repr(),
        parsed_answer: parsed,
        verdict: Verdict::Wrong,
        output_type: type_tag(&expected).to_string(),
        max_tokens: settings.max_tokens,
        per_step: None,
        first_bad_action,
        discontinuity: None,
    }))
}

fn oracle_reading(item: &BenchmarkItem) -> Result<crate::s5trace::S5Reading, HarnessError> {
    let doc = execute_traced(&item.program, &item.entry_call, ZOO_EVAL_CEILING)?;
    let text = serialize_trace(&doc);
    read_s5_trace(&text).map_err(|e| HarnessError::ParseFailure(e.to_string()))
}

fn first_bad_action(item: &BenchmarkItem, completion: &str) -> Result<Option<usize>, HarnessError> {
    let Some(spec) = item.s5_spec() else { return Ok(None) };
    let n = spec.n_vars();
    let truth = oracle_reading(item)?;
    let Ok(got) = read_s5_trace(completion) else { return Ok(Some(1)) };
    let want = truth.op_actions(n);
    let have = got.op_actions(n);
    Ok(want
        .iter()
        .enumerate()
        .find(|(i, a)| have.get(*i) != Some(a))
        .map(|(i, _)| i + 1))
}

/// Per-op comparison of the states in a generated s5 trace with the oracle.
/// Entry `k - 1` is whether the state after op `k` matches.
pub fn s5_state_alignment(item: &BenchmarkItem, completion: &str) -> Result<Vec<bool>, HarnessError> {
    let spec = item
        .s5_spec()
        .ok_or_else(|| HarnessError::mismatch(PromptKind::S5Cwm, &item.id(), "not an s5 program"))?;
    let n = spec.n_vars();
    let want = oracle_reading(item)?.states_after_ops(n);
    let got = read_s5_trace(completion).map(|r| r.states_after_ops(n)).unwrap_or_default();
    Ok(want
        .iter()
        .enumerate()
        .map(|(i, w)| w.is_some() && got.get(i) == Some(w))
        .collect())
}

/// Teacher forcing on an s5 item: for each op `k`, the prompt holds the
/// true trace through op `k`'s action and the model writes only the next
/// state. Its own earlier predictions are never fed back.
pub fn teacher_force_eval(
    item: &BenchmarkItem,
    model: &dyn CompletionModel,
    settings: &EvalSettings,
) -> Result<EvalRecord, HarnessError> {
    let kind = PromptKind::S5Cwm;
    let spec = item
        .s5_spec()
        .ok_or_else(|| HarnessError::mismatch(kind, &item.id(), "teacher forcing needs an s5 item"))?;
    let n = spec.n_vars();
    let base = build_prompt(kind, item)?;
    let doc = execute_traced(&item.program, &item.entry_call, ZOO_EVAL_CEILING)?;
    let chunks = event_chunks(&doc.events);
    let ops: Vec<usize> = doc
        .events
        .iter()
        .enumerate()
        .filter(|(_, e)| e.kind == EventKind::Line && e.function == S5_FUNCTION && is_op_line(&e.action_line, n))
        .map(|(i, _)| i)
        .collect();

    let stop = vec![ACTION_SEP.to_string()];
    let mut steps = Vec::with_capacity(ops.len());
    let mut outputs = Vec::with_capacity(ops.len());
    let mut last_finish = FinishReason::Stop;
    let mut last_prediction = None;
    for (k, &j) in ops.iter().enumerate() {
        let next = doc
            .events
            .get(j + 1)
            .filter(|e| e.kind == EventKind::Line)
            .ok_or_else(|| HarnessError::mismatch(kind, &item.id(), "op is not followed by a line event"))?;
        let shown = chunks[..=j].concat();
        let text = format!("{}{}{FRAME_SEP}{}", base.text, &shown[FRAME_SEP.len()..], next.kind.token());
        let completion = model.complete(&Prompt { system: None, text }, &stop, settings.max_tokens)?;
        let state_text = completion.text.split(ACTION_SEP).next().unwrap_or("").trim();
        let predicted = read_state(state_text, &doc.events[j].snapshot).and_then(|s| state_values(&s, n));
        let ground = state_values(&next.snapshot, n).unwrap_or_default();
        steps.push(StepRecord {
            step: k + 1,
            predicted_state: predicted.as_deref().map(render_assignment),
            ground_state: render_assignment(&ground),
            matches: predicted.as_ref() == Some(&ground),
        });
        last_finish = completion.finish_reason;
        last_prediction = predicted;
        outputs.push(completion.text);
    }
    let expected = item.expected_output.clone();
    let parsed = last_prediction.map(|s| Value::Tuple(s.into_iter().map(Value::int).collect()).repr());
    Ok(finish_record(EvalRecord {
        item: item.clone(),
        kind,
        mode: EvalMode::TeacherForcing,
        variant: settings.variant,
        prompt: base.flat(),
        completion: outputs.join("\n"),
        finish_reason: last_finish,
        expected: expected.repr(),
        parsed_answer: parsed,
        verdict: Verdict::Wrong,
        output_type: type_tag(&expected).to_string(),
        max_tokens: settings.max_tokens,
        per_step: Some(steps),
        first_bad_action: None,
        discontinuity: None,
    }))
}

/// Parses a generated `{...}` state and resolves `".."` against the true
/// previous snapshot of the frame.
fn read_state(text: &str, prev: &[(String, String)]) -> Option<Vec<(String, String)>> {
    let synthetic = format!("{FRAME_SEP}<|line_sep|>{text}{ACTION_SEP}x\n{FRAME_SEP}");
    let ev = parse_trace(&synthetic).ok()?.pop()?;
    ev.state
        .into_iter()
        .map(|(k, v)| {
            if v == UNCHANGED {
                prev.iter().find(|(p, _)| *p == k).map(|(_, old)| (k.clone(), old.clone()))
            } else {
                Some((k, v))
            }
        })
        .collect()
}

pub fn evaluate_item(
    item: &BenchmarkItem,
    model: &dyn CompletionModel,
    settings: &EvalSettings,
) -> Result<EvalRecord, HarnessError> {
    match settings.mode {
        EvalMode::Baseline => evaluate_baseline(item, model, settings),
        EvalMode::TeacherForcing => teacher_force_eval(item, model, settings),
    }
}

/// Evaluates items on up to `settings.jobs` threads. Results keep the
/// input order.
pub fn run_eval(
    items: &[BenchmarkItem],
    model: &dyn CompletionModel,
    settings: &EvalSettings,
) -> Vec<Result<EvalRecord, HarnessError>> {
    let jobs = settings.jobs.clamp(1, items.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<EvalRecord, HarnessError>>>> =
        Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(item) = items.get(i) else { break };
                let res = evaluate_item(item, model, settings);
                if let Ok(r) = &res {
                    debug!(item = %item.id(), verdict = %r.verdict, "scored");
                }
                slots.lock().expect("result lock")[i] = Some(res);
            });
        }
    });
    let out: Vec<_> = slots
        .into_inner()
        .expect("result lock")
        .into_iter()
        .map(|r| r.expect("every item evaluated"))
        .collect();
    let correct = out.iter().filter(|r| matches!(r, Ok(rec) if rec.verdict == Verdict::Correct)).count();
    info!(items = items.len(), correct, "evaluation finished");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mock::{CannedModel, OracleModel};
    use tracebench_core::benchgen::{gen_s5_program, gen_zoo_item, Category};
    use tracebench_core::minipy::SourceProgram;

    fn record(expected: &str, parsed: Option<&str>, finish: FinishReason) -> EvalRecord {
        let item = BenchmarkItem::external("cruxeval", SourceProgram::new("def f():\n    return 0\n"), "f()", 0).unwrap();
        EvalRecord {
            item,
            kind: PromptKind::Cruxeval,
            mode: EvalMode::Baseline,
            variant: Variant::Original,
            prompt: String::new(),
            completion: String::new(),
            finish_reason: finish,
            expected: expected.into(),
            parsed_answer: parsed.map(String::from),
            verdict: Verdict::Wrong,
            output_type: String::new(),
            max_tokens: 10,
            per_step: None,
            first_bad_action: None,
            discontinuity: None,
        }
    }

    #[test]
    fn classification() {
        let r = record("'tcmfsm'", Some("'tcmfs'"), FinishReason::Stop);
        assert_eq!(classify_failure(&r), (Verdict::Wrong, "str".into()));
        let r = record("[-2, 4, -4]", None, FinishReason::Length);
        assert_eq!(classify_failure(&r), (Verdict::Truncated, "list".into()));
        let r = record("6", Some("6"), FinishReason::Stop);
        assert_eq!(classify_failure(&r), (Verdict::Correct, "int".into()));
        let r = record("None", None, FinishReason::Stop);
        assert_eq!(classify_failure(&r), (Verdict::Wrong, "none".into()));
        // a bool answer is not an int answer, even though True == 1
        let r = record("1", Some("True"), FinishReason::Stop);
        assert_eq!(classify_failure(&r).0, Verdict::Wrong);
        let r = record("2", Some("2.0"), FinishReason::Stop);
        assert_eq!(classify_failure(&r).0, Verdict::Correct);
    }

    #[test]
    fn canned_answers() {
        let item = BenchmarkItem::external(
            "humaneval",
            SourceProgram::new("def f(a,b):\n    y = a\n    for i in range(b):\n        y += y * i\n    return y\n"),
            "f(1,3)",
            0,
        )
        .unwrap();
        let s = EvalSettings::default();
        let good = CannedModel::new("[ANSWER]\nassert f(1,3) == 6\n[/ANSWER]");
        let rec = evaluate_baseline(&item, &good, &s).unwrap();
        assert_eq!(rec.verdict, Verdict::Correct);
        assert_eq!(rec.parsed_answer.as_deref(), Some("6"));
        assert!(rec.per_step.is_none());
        let cut = CannedModel::cut_off("<|frame_sep|><|call_sep|>{}");
        assert_eq!(evaluate_baseline(&item, &cut, &s).unwrap().verdict, Verdict::Truncated);
        let cut_but_answered = CannedModel::cut_off("[ANSWER]\nassert f(1,3) == 6\n[/ANSWER]");
        assert_eq!(evaluate_baseline(&item, &cut_but_answered, &s).unwrap().verdict, Verdict::Correct);
    }

    #[test]
    fn oracle_scores_everything() {
        let items = vec![
            gen_zoo_item(Category::Math, 3, 1).unwrap(),
            gen_zoo_item(Category::String, 2, 4).unwrap(),
            gen_s5_program(5, 16, 2, (1, 9)).unwrap(),
        ];
        let s = EvalSettings { jobs: 2, max_tokens: 1 << 20, ..EvalSettings::default() };
        for r in run_eval(&items, &OracleModel::new(), &s) {
            let r = r.unwrap();
            assert_eq!(r.verdict, Verdict::Correct, "{}", r.item.id());
        }
        let chat = EvalSettings { kind: Some(PromptKind::S5Chat), ..s.clone() };
        let r = evaluate_baseline(&items[2], &OracleModel::new(), &chat).unwrap();
        assert_eq!(r.verdict, Verdict::Correct, "{} vs {:?} from {:?}", r.expected, r.parsed_answer, r.completion);
        let printed = EvalSettings { extraction: S5Extraction::PrintedValue, ..s };
        let r = evaluate_baseline(&items[2], &OracleModel::new(), &printed).unwrap();
        assert_eq!(r.verdict, Verdict::Correct);
        assert_eq!(r.output_type, "int");
    }

    #[test]
    fn small_budget_truncates() {
        let item = gen_s5_program(5, 32, 0, (1, 9)).unwrap();
        let s = EvalSettings { max_tokens: 50, ..EvalSettings::default() };
        let r = evaluate_baseline(&item, &OracleModel::new(), &s).unwrap();
        assert_eq!(r.finish_reason, FinishReason::Length);
        assert_eq!(r.verdict, Verdict::Truncated);
    }

    #[test]
    fn teacher_forced_oracle() {
        let item = gen_s5_program(5, 8, 5, (1, 9)).unwrap();
        let s = EvalSettings { mode: EvalMode::TeacherForcing, ..EvalSettings::default() };
        let r = evaluate_item(&item, &OracleModel::new(), &s).unwrap();
        let steps = r.per_step.as_ref().unwrap();
        assert_eq!(steps.len(), 8);
        assert!(steps.iter().all(|s| s.matches));
        assert_eq!(r.verdict, Verdict::Correct);
        assert_eq!(r.step_accuracy(), Some(1.0));
        let zoo = gen_zoo_item(Category::Math, 1, 0).unwrap();
        assert!(teacher_force_eval(&zoo, &OracleModel::new(), &s).is_err());
    }
}
