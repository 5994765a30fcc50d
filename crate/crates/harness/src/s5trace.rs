//! Reading S5 state sequences back out of (possibly partial) trace text.

use tracebench_core::benchgen::VAR_NAMES;
use tracebench_core::tracer::serialize::FRAME_SEP;
use tracebench_core::tracer::{expand_snapshots, parse_trace, EventKind, TraceParseError};

pub const S5_FUNCTION: &str = "execute_repl_trace";

/// A line event inside `execute_repl_trace`, with its state fully expanded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameLine {
    pub action: String,
    pub state: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct S5Reading {
    pub lines: Vec<FrameLine>,
    /// `execute_repl_trace` returned within the text.
    pub terminal: bool,
}

/// `a, b, c, d, e = ...` for the first `n_vars` names.
pub fn is_op_line(action: &str, n_vars: usize) -> bool {
    let lhs = VAR_NAMES[..n_vars.min(VAR_NAMES.len())].join(", ");
    action.trim_start().starts_with(&format!("{lhs} = "))
}

fn function_name(def_line: &str) -> Option<&str> {
    def_line.trim_start().strip_prefix("def ")?.split('(').next()
}

/// Reads trace text as continued after a prompt ending in `<|frame_sep|>`.
/// Anything after the last complete event is ignored.
pub fn read_s5_trace(text: &str) -> Result<S5Reading, TraceParseError> {
    let full = if text.starts_with(FRAME_SEP) {
        text.to_string()
    } else {
        format!("{FRAME_SEP}{text}")
    };
    let Some(cut) = full.rfind(FRAME_SEP) else {
        return Ok(S5Reading::default());
    };
    let complete = &full[..cut + FRAME_SEP.len()];
    let events = parse_trace(complete)?;
    let states = expand_snapshots(&events)?;
    let mut stack: Vec<String> = Vec::new();
    let mut reading = S5Reading::default();
    for (ev, state) in events.iter().zip(states) {
        match ev.kind {
            EventKind::Call => stack.push(function_name(&ev.action_line).unwrap_or("").to_string()),
            EventKind::Line => {
                if stack.last().map(String::as_str) == Some(S5_FUNCTION) {
                    reading.lines.push(FrameLine {
                        action: ev.action_line.clone(),
                        state,
                    });
                }
            }
            EventKind::Return | EventKind::Exception => {
                if stack.pop().as_deref() == Some(S5_FUNCTION) {
                    reading.terminal = true;
                    break;
                }
            }
        }
    }
    Ok(reading)
}

/// Values of the first `n_vars` variables, if all are bound to ints.
pub fn state_values(state: &[(String, String)], n_vars: usize) -> Option<Vec<i64>> {
    VAR_NAMES[..n_vars]
        .iter()
        .map(|v| state.iter().find(|(k, _)| k == v).and_then(|(_, r)| r.parse().ok()))
        .collect()
}

impl S5Reading {
    /// Number of variables, from the widest state seen.
    pub fn n_vars(&self) -> usize {
        self.lines
            .iter()
            .map(|l| VAR_NAMES.iter().take_while(|v| l.state.iter().any(|(k, _)| k == *v)).count())
            .max()
            .unwrap_or(0)
    }

    pub fn op_actions(&self, n_vars: usize) -> Vec<&str> {
        self.lines
            .iter()
            .filter(|l| is_op_line(&l.action, n_vars))
            .map(|l| l.action.trim())
            .collect()
    }

    /// State after each op, read from the next line event of the frame.
    pub fn states_after_ops(&self, n_vars: usize) -> Vec<Option<Vec<i64>>> {
        self.lines
            .iter()
            .enumerate()
            .filter(|(_, l)| is_op_line(&l.action, n_vars))
            .map(|(i, _)| self.lines.get(i + 1).and_then(|next| state_values(&next.state, n_vars)))
            .collect()
    }

    pub fn last_state(&self, n_vars: usize) -> Option<Vec<i64>> {
        self.lines.iter().rev().find_map(|l| state_values(&l.state, n_vars))
    }

    /// `(variable, value)` at the `print(f"x = {x}")` line.
    pub fn printed(&self) -> Option<(String, i64)> {
        self.lines.iter().rev().find_map(|l| {
            let rest = l.action.trim().strip_prefix("print(f\"")?;
            let name = rest.split(' ').next()?;
            let value = l.state.iter().find(|(k, _)| k == name)?.1.parse().ok()?;
            Some((name.to_string(), value))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tracebench_core::benchgen::{gen_s5_program, prefix_states};
    use tracebench_core::tracer::{execute_traced, serialize_trace};

    fn oracle_text(n: usize, seed: u64) -> (String, tracebench_core::benchgen::S5Spec) {
        let item = gen_s5_program(5, n, seed, (1, 9)).unwrap();
        let doc = execute_traced(&item.program, "main()", 100_000).unwrap();
        let text = serialize_trace(&doc);
        (text[FRAME_SEP.len()..].to_string(), item.s5_spec().unwrap())
    }

    #[test]
    fn reads_full_trace() {
        let (text, spec) = oracle_text(16, 3);
        let r = read_s5_trace(&text).unwrap();
        assert!(r.terminal);
        assert_eq!(r.n_vars(), 5);
        let want = prefix_states(&spec.ops, &spec.init).unwrap();
        let got: Vec<Vec<i64>> = r.states_after_ops(5).into_iter().map(Option::unwrap).collect();
        assert_eq!(got, want[1..]);
        assert_eq!(r.last_state(5).unwrap(), spec.final_state().unwrap());
        let (var, value) = r.printed().unwrap();
        assert_eq!(var, VAR_NAMES[spec.query]);
        assert_eq!(value, spec.final_state().unwrap()[spec.query]);
        assert_eq!(r.op_actions(5).len(), 16);
    }

    #[test]
    fn partial_text_is_not_terminal() {
        let (text, _) = oracle_text(8, 1);
        let half = &text[..text.len() / 2];
        let r = read_s5_trace(half).unwrap();
        assert!(!r.terminal);
        assert!(r.lines.len() < 14);
        assert!(read_s5_trace("").unwrap().lines.is_empty());
    }

    #[test]
    fn garbage_is_an_error() {
        assert!(read_s5_trace("<|bogus|>{}<|frame_sep|>").is_err());
    }
}
