//! Prompt construction for each benchmark style.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use tracebench_core::benchgen::{BenchmarkItem, Family, S5Spec};
use tracebench_core::minipy::ENTRY_MARKER;
use tracebench_core::tracer::serialize::FRAME_SEP;

use crate::prompt_text::{PREAMBLE, S5_SYSTEM, S5_USER_HEAD, S5_USER_TAIL, VERIFY, WORKED_EXAMPLE};
use crate::HarnessError;

pub const TRACE_CONTEXT_START: &str = "<|trace_context_start|>";
pub const BEGIN_OF_TEXT: &str = "<|begin_of_text|>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Cruxeval,
    Humaneval,
    Composition,
    S5Cwm,
    S5Chat,
}

impl PromptKind {
    pub const ALL: [PromptKind; 5] = [
        PromptKind::Cruxeval,
        PromptKind::Humaneval,
        PromptKind::Composition,
        PromptKind::S5Cwm,
        PromptKind::S5Chat,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptKind::Cruxeval => "cruxeval",
            PromptKind::Humaneval => "humaneval",
            PromptKind::Composition => "composition",
            PromptKind::S5Cwm => "s5_cwm",
            PromptKind::S5Chat => "s5_chat",
        }
    }

    /// The natural prompt style for an item.
    pub fn default_for(item: &BenchmarkItem) -> PromptKind {
        match item.family {
            Family::Zoo | Family::StringComp => PromptKind::Composition,
            Family::S5 => PromptKind::S5Cwm,
            Family::External if item.category == "humaneval" => PromptKind::Humaneval,
            Family::External => PromptKind::Cruxeval,
        }
    }

    /// Answers come in `[ANSWER]` tags.
    pub fn uses_answer_tags(self) -> bool {
        matches!(self, PromptKind::Cruxeval | PromptKind::Humaneval | PromptKind::Composition)
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown prompt kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    /// Only the chat style has one.
    pub system: Option<String>,
    pub text: String,
}

impl Prompt {
    fn plain(text: String) -> Self {
        Prompt { system: None, text }
    }

    /// System and user text in one string, for logs and reports.
    pub fn flat(&self) -> String {
        match &self.system {
            Some(s) => format!("{s}\n\n{}", self.text),
            None => self.text.clone(),
        }
    }
}

pub fn build_prompt(kind: PromptKind, item: &BenchmarkItem) -> Result<Prompt, HarnessError> {
    match kind {
        PromptKind::Cruxeval | PromptKind::Humaneval => function_prompt(kind, item),
        PromptKind::Composition => composition_prompt(item),
        PromptKind::S5Cwm => {
            s5_spec(kind, item)?;
            Ok(Prompt::plain(format!(
                "{BEGIN_OF_TEXT}{TRACE_CONTEXT_START}\n{}{FRAME_SEP}",
                item.program.source_text
            )))
        }
        PromptKind::S5Chat => {
            let spec = s5_spec(kind, item)?;
            if spec.n_vars() != 5 {
                return Err(HarnessError::mismatch(kind, &item.id(), "the chat template is written for five variables"));
            }
            Ok(Prompt {
                system: Some(S5_SYSTEM.to_string()),
                text: format!("{S5_USER_HEAD}\n\n{}\n{S5_USER_TAIL}", chat_program(&spec)),
            })
        }
    }
}

fn s5_spec(kind: PromptKind, item: &BenchmarkItem) -> Result<S5Spec, HarnessError> {
    item.s5_spec()
        .ok_or_else(|| HarnessError::mismatch(kind, &item.id(), "not an s5 program"))
}

/// The program as shown to chat models: no print, no trace marker.
fn chat_program(spec: &S5Spec) -> String {
    spec.program_text()
        .lines()
        .filter(|l| !l.trim_start().starts_with("print("))
        .map(|l| match l.split_once(" # ") {
            Some((head, tail)) if tail.contains(ENTRY_MARKER) => head,
            _ => l,
        })
        .fold(String::new(), |mut acc, l| {
            acc.push_str(l);
            acc.push('\n');
            acc
        })
}

fn problem(header: &str, first: &str, call: &str, second: &str) -> String {
    format!("{header}\n{first}\nassert {call} == ??\n\n{VERIFY}\n\n{second}")
}

fn function_prompt(kind: PromptKind, item: &BenchmarkItem) -> Result<Prompt, HarnessError> {
    let call = item.entry_call.trim();
    let name = call
        .split_once('(')
        .map(|(n, _)| n.trim())
        .filter(|n| !n.is_empty() && call.ends_with(')'))
        .ok_or_else(|| HarnessError::mismatch(kind, &item.id(), "entry call is not a function call"))?;
    if kind == PromptKind::Cruxeval && name != "f" {
        return Err(HarnessError::mismatch(kind, &item.id(), "the function must be named f"));
    }
    let code = item.program.source_text.trim_end();
    if code.contains("def main(") {
        return Err(HarnessError::mismatch(kind, &item.id(), "program already defines main()"));
    }
    let second = format!("{code}\n\ndef main(): # << START_OF_TRACE\n    return {call}");
    let body = problem("Python function:", code, call, &second);
    let text = match kind {
        PromptKind::Humaneval => format!("{PREAMBLE}\n\n{WORKED_EXAMPLE}\n\nNow solve this problem:\n\n{body}"),
        _ => format!("{PREAMBLE}\n\nNow solve this problem:\n\n{body}"),
    };
    Ok(Prompt::plain(text))
}

const MAIN_SOLUTION: &str = "\n\ndef main_solution(x):";

/// `main_solution(<input>)` as written in `main`.
pub(crate) fn composition_call(src: &str) -> Option<&str> {
    let main_at = src.find("\ndef main(")?;
    src[main_at..]
        .lines()
        .find_map(|l| l.trim().strip_prefix("return "))
        .filter(|c| c.starts_with("main_solution("))
}

fn composition_prompt(item: &BenchmarkItem) -> Result<Prompt, HarnessError> {
    let kind = PromptKind::Composition;
    let src = &item.program.source_text;
    let split = src
        .find(MAIN_SOLUTION)
        .ok_or_else(|| HarnessError::mismatch(kind, &item.id(), "no main_solution(x)"))?;
    let call = composition_call(src).ok_or_else(|| HarnessError::mismatch(kind, &item.id(), "main() does not call main_solution"))?;
    let defs = format!("{}\n\n", src[..split].trim_end());
    let body = problem("Python functions:", &defs, call, src.trim_end());
    Ok(Prompt::plain(format!(
        "{PREAMBLE}\n\n{WORKED_EXAMPLE}\n\nNow solve this problem:\n\n{body}"
    )))
}

/// The call asserted in an `[ANSWER]` style prompt, e.g. `f(1,3)`.
pub fn asserted_call(prompt: &str) -> Option<&str> {
    prompt
        .lines()
        .rev()
        .find_map(|l| l.strip_prefix("assert ").and_then(|r| r.strip_suffix(" == ??")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tracebench_core::benchgen::{gen_s5_program, gen_zoo_item, Category, Permutation};
    use tracebench_core::minipy::SourceProgram;
    use tracebench_core::tracer::{execute_traced, serialize_trace};

    fn app_a_item(category: &str) -> BenchmarkItem {
        let src = "def f(a,b):\n    y = a\n    for i in range(b):\n        y += y * i\n    return y\n";
        BenchmarkItem::external(category, SourceProgram::new(src), "f(1,3)", 0).unwrap()
    }

    fn eight_swap() -> BenchmarkItem {
        let vars = ["a", "b", "c", "d", "e"];
        let ops = [
            "c, e, b, a, d",
            "e, b, c, d, a",
            "b, e, a, c, d",
            "a, b, e, d, c",
            "b, c, e, a, d",
            "e, a, c, b, d",
            "a, e, c, b, d",
            "b, d, e, c, a",
        ]
        .iter()
        .map(|r| Permutation::from_names(&vars, &r.split(", ").collect::<Vec<_>>()).unwrap())
        .collect();
        S5Spec { init: vec![8, 4, 7, 8, 7], ops, query: 2 }.to_item(0).unwrap()
    }

    #[test]
    fn worked_example_matches_our_tracer() {
        let item = app_a_item("humaneval");
        let prog = SourceProgram::new(format!(
            "{}\ndef main(): # << START_OF_TRACE\n    return f(1,3)\n",
            item.program.source_text
        ));
        let trace = serialize_trace(&execute_traced(&prog, "main()", 10_000).unwrap());
        assert!(WORKED_EXAMPLE.contains(&trace));
    }

    #[test]
    fn humaneval_and_cruxeval_layout() {
        let item = app_a_item("humaneval");
        let p = build_prompt(PromptKind::Humaneval, &item).unwrap();
        assert!(p.system.is_none());
        assert!(p.text.starts_with("Given a python code function"));
        assert!(p.text.contains("[/ANSWER]\n\nNow solve this problem:\n\nPython function:\ndef f(a,b):"));
        assert!(p.text.ends_with("    return y\n\ndef main(): # << START_OF_TRACE\n    return f(1,3)"));
        assert_eq!(asserted_call(&p.text), Some("f(1,3)"));

        let c = build_prompt(PromptKind::Cruxeval, &item).unwrap();
        assert!(!c.text.contains("Here is an example"));
        assert!(c.text.contains("tags\n\nNow solve this problem:\n\nPython function:\ndef f(a,b):"));
        assert!(c.text.contains("    return y\nassert f(1,3) == ??\n\nLet's verify"));
    }

    #[test]
    fn cruxeval_needs_f() {
        let item = BenchmarkItem::external("cruxeval", SourceProgram::new("def g(x):\n    return x\n"), "g(1)", 0).unwrap();
        let err = build_prompt(PromptKind::Cruxeval, &item).unwrap_err();
        assert!(matches!(err, HarnessError::TemplateMismatch { .. }));
        assert!(build_prompt(PromptKind::Humaneval, &item).is_ok());
    }

    #[test]
    fn composition_prompt_body() {
        let item = gen_zoo_item(Category::String, 3, 1).unwrap();
        let p = build_prompt(PromptKind::Composition, &item).unwrap();
        let call = composition_call(&item.program.source_text).unwrap();
        assert!(p.text.contains(&format!("\n\n\nassert {call} == ??\n\nLet's verify")));
        assert!(p.text.contains("\ndef main_solution(x):\n    return "));
        assert!(p.text.ends_with(&format!("def main(): # << START_OF_TRACE\n    return {call}")));
        assert_eq!(asserted_call(&p.text), Some(call));
    }

    #[test]
    fn s5_prompts() {
        let item = eight_swap();
        let cwm = build_prompt(PromptKind::S5Cwm, &item).unwrap();
        assert!(cwm.text.starts_with("<|begin_of_text|><|trace_context_start|>\ndef execute_repl_trace():\n"));
        assert!(cwm.text.ends_with("    print(f\"c = {c}\")\n\ndef main(): # << START_OF_TRACE\n    execute_repl_trace()\n<|frame_sep|>"));

        let chat = build_prompt(PromptKind::S5Chat, &item).unwrap();
        let system = chat.system.as_deref().unwrap();
        assert!(system.contains("Answer: a=4,b=5,c=2,d=1,e=3"));
        assert!(chat.text.contains("    a, b, c, d, e = b, d, e, c, a\n\ndef main():\n    execute_repl_trace()\n\nWhat are the final"));
        assert!(!chat.text.contains("print("));
        assert!(chat.text.ends_with("a=X,b=X,c=X,d=X,e=X"));
    }

    #[test]
    fn wrong_kind_is_a_mismatch() {
        let s5 = gen_s5_program(5, 8, 0, (1, 9)).unwrap();
        let zoo = gen_zoo_item(Category::Math, 2, 0).unwrap();
        assert!(build_prompt(PromptKind::Composition, &s5).is_err());
        assert!(build_prompt(PromptKind::S5Cwm, &zoo).is_err());
        assert!(build_prompt(PromptKind::Cruxeval, &zoo).is_err());
        let s4 = gen_s5_program(4, 8, 0, (1, 9)).unwrap();
        assert!(build_prompt(PromptKind::S5Cwm, &s4).is_ok());
        assert!(build_prompt(PromptKind::S5Chat, &s4).is_err());
    }

    #[test]
    fn kind_names_roundtrip() {
        for k in PromptKind::ALL {
            assert_eq!(k.as_str().parse::<PromptKind>().unwrap(), k);
        }
    }
}
