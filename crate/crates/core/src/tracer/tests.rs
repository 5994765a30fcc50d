use super::*;
use crate::minipy::SourceProgram;

const GOLDEN_PROGRAM: &str = include_str!("../../tests/golden/worked_example.py");
const GOLDEN_TRACE: &str = include_str!("../../tests/golden/worked_example.trace");

fn trace(src: &str, call: &str) -> TraceDocument {
    execute_traced(&SourceProgram::new(src), call, DEFAULT_STEP_CEILING).expect("runs")
}

fn ret(src: &str, call: &str) -> String {
    match evaluate(&SourceProgram::new(src), call, DEFAULT_STEP_CEILING).expect("runs") {
        Outcome::Returned(v) => v.repr(),
        other => panic!("expected a return, got {other}"),
    }
}

fn raised(src: &str, call: &str) -> String {
    match evaluate(&SourceProgram::new(src), call, DEFAULT_STEP_CEILING).expect("runs") {
        Outcome::Raised { rendering, .. } => rendering,
        other => panic!("expected an exception, got {other}"),
    }
}

#[test]
fn worked_example_is_byte_identical() {
    let doc = trace(GOLDEN_PROGRAM, "main()");
    assert_eq!(serialize_trace(&doc), GOLDEN_TRACE);
    assert_eq!(doc.final_return.as_ref().map(Value::repr).as_deref(), Some("6"));
    assert_eq!(doc.events.len(), 14);
}

#[test]
fn trivial_main() {
    let doc = trace("def main(): return 0\n", "main()");
    let kinds: Vec<EventKind> = doc.events.iter().map(|e| e.kind).collect();
    assert_eq!(kinds, [EventKind::Call, EventKind::Line, EventKind::Return]);
    assert_eq!(doc.final_return, Some(Value::int(0)));
}

#[test]
fn empty_trace_is_terminal_token() {
    assert_eq!(serialize::serialize_events(&[]), "<|frame_sep|>");
}

#[test]
fn diff_examples() {
    let b = |v: &[(&str, &str)]| -> Vec<Binding> { v.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect() };
    let prev = b(&[("a", "1"), ("b", "3")]);
    let curr = b(&[("a", "1"), ("b", "3"), ("y", "1")]);
    assert_eq!(
        serialize::render_state(&snapshot_diff(Some(&prev), &curr)),
        r#"{"a": "..", "b": "..", "y": "1"}"#
    );
    assert!(snapshot_diff(None, &[]).is_empty());
    let shown = snapshot_diff(Some(&b(&[("y", "2")])), &b(&[("y", "6")]));
    assert_eq!(serialize::render_state(&shown), r#"{"y": "6"}"#);
}

#[test]
fn roundtrip_and_expansion() {
    let src = "def g(x):\n    return x * 2\n\ndef main():\n    s = 0\n    for k in range(3):\n        s += g(k)\n    return s\n";
    let doc = trace(src, "main()");
    let text = serialize_trace(&doc);
    let parsed = parse_trace(&text).unwrap();
    assert_eq!(parsed.len(), doc.events.len());
    let full = expand_snapshots(&parsed).unwrap();
    for (ev, snap) in doc.events.iter().zip(&full) {
        assert_eq!(&ev.snapshot, snap);
    }
}

#[test]
fn frame_sep_count() {
    let doc = trace(GOLDEN_PROGRAM, "main()");
    let text = serialize_trace(&doc);
    assert_eq!(text.matches("<|frame_sep|>").count(), doc.events.len() + 1);
}

#[test]
fn exceptions_unwind_every_frame() {
    let src = "def h(x):\n    return 10 // x\n\ndef main():\n    return h(0)\n";
    let doc = trace(src, "main()");
    let closing: Vec<&TraceEvent> = doc.events.iter().filter(|e| e.kind == EventKind::Exception).collect();
    assert_eq!(closing.len(), 2);
    assert_eq!(closing[0].payload.as_deref(), Some("ZeroDivisionError('integer division or modulo by zero')"));
    assert_eq!(doc.exception.as_deref(), Some("ZeroDivisionError('integer division or modulo by zero')"));
    assert!(doc.final_return.is_none());
}

#[test]
fn step_ceiling_truncates() {
    let src = "def main():\n    x = 0\n    while True:\n        x += 1\n";
    let doc = execute_traced(&SourceProgram::new(src), "main()", 50).unwrap();
    assert_eq!(doc.step_count, 50);
    assert_eq!(doc.truncated_at, Some(doc.events.len()));
    assert_eq!(doc.truncation, Some(Truncation::StepCeiling));
    assert!(doc.final_return.is_none());

    let straight = execute_traced(&SourceProgram::new("def main():\n    a = 1\n    return a\n"), "main()", 50).unwrap();
    assert!(straight.completed());
}

#[test]
fn mutation_during_iteration_truncates() {
    let src = "def main():\n    xs = [1]\n    for x in xs:\n        xs.append(x)\n    return len(xs)\n";
    let doc = execute_traced(&SourceProgram::new(src), "main()", 1000).unwrap();
    assert_eq!(doc.truncation, Some(Truncation::StepCeiling));
}

#[test]
fn token_budget_cuts_at_first_overflowing_event() {
    let doc = trace(GOLDEN_PROGRAM, "main()");
    let chars = |s: &str| s.len();
    let full = trace_token_cost(&doc, &chars);
    let cut = doc.clone().with_token_budget(full - 1, &chars);
    assert_eq!(cut.truncated_at, Some(doc.events.len() - 1));
    assert!(trace_token_cost(&cut, &chars) <= full - 1);
    assert!(doc.clone().with_token_budget(full, &chars).completed());
}

#[test]
fn for_loop_events_skip_header_after_break() {
    let src = "def main():\n    for i in range(5):\n        if i == 1:\n            break\n    return i\n";
    let doc = trace(src, "main()");
    let lines: Vec<usize> = doc.events.iter().filter(|e| e.kind == EventKind::Line).map(|e| e.line).collect();
    assert_eq!(lines, [2, 3, 2, 3, 4, 5]);
}

#[test]
fn while_header_on_each_test() {
    let src = "def main():\n    n = 2\n    while n > 0:\n        n -= 1\n    return n\n";
    let doc = trace(src, "main()");
    let lines: Vec<usize> = doc.events.iter().filter(|e| e.kind == EventKind::Line).map(|e| e.line).collect();
    assert_eq!(lines, [2, 3, 4, 3, 4, 3, 5]);
}

#[test]
fn lambda_gets_its_own_frame() {
    let src = "def main():\n    f = lambda x: x + 1\n    return f(2)\n";
    let doc = trace(src, "main()");
    let kinds: Vec<EventKind> = doc.events.iter().map(|e| e.kind).collect();
    use EventKind::*;
    assert_eq!(kinds, [Call, Line, Line, Call, Line, Return, Return]);
    assert_eq!(doc.events[3].function, "main.<locals>.<lambda>");
}

#[test]
fn closures_show_free_vars() {
    let src = "def main():\n    k = 3\n    def add(x):\n        return x + k\n    return add(1)\n";
    let doc = trace(src, "main()");
    let call = doc.events.iter().find(|e| e.kind == EventKind::Call && e.function.ends_with("add")).unwrap();
    assert_eq!(call.snapshot, vec![("x".into(), "1".into()), ("k".into(), "3".into())]);
    assert_eq!(doc.final_return, Some(Value::int(4)));
}

#[test]
fn comprehension_vars_stay_hidden() {
    let src = "def main():\n    ys = [x * x for x in range(4) if x % 2 == 0]\n    return ys\n";
    let doc = trace(src, "main()");
    assert!(doc.events.iter().all(|e| e.snapshot.iter().all(|(n, _)| n != "x")));
    assert_eq!(doc.final_return.unwrap().repr(), "[0, 4]");
}

#[test]
fn print_is_captured() {
    let src = "def main():\n    c = 7\n    print(f\"c = {c}\")\n";
    let doc = trace(src, "main()");
    assert_eq!(doc.stdout, "c = 7\n");
    assert_eq!(doc.final_return, Some(Value::None));
}

#[test]
fn string_method_semantics() {
    let p = "def main(s):\n    return s\n";
    let _ = p;
    assert_eq!(ret("def main():\n    return 'a,b,,c'.rsplit(',', 1)\n", "main()"), "['a,b,', 'c']");
    assert_eq!(ret("def main():\n    return ',a,'.rsplit(',')\n", "main()"), "['', 'a', '']");
    assert_eq!(ret("def main():\n    return 'abc'.find('z')\n", "main()"), "-1");
    assert_eq!(
        raised("def main():\n    return 'abc'.index('z')\n", "main()"),
        "ValueError('substring not found')"
    );
    assert_eq!(ret("def main():\n    return 'ab'.center(5, '*')\n", "main()"), "'**ab*'");
    assert_eq!(ret("def main():\n    return 'abc'.center(6, '*')\n", "main()"), "'*abc**'");
    assert_eq!(ret("def main():\n    return 'a'.center(4, '-')\n", "main()"), "'-a--'");
    assert_eq!(ret("def main():\n    return '  a  b '.split()\n", "main()"), "['a', 'b']");
    assert_eq!(ret("def main():\n    return ' a b c '.split(None, 1)\n", "main()"), "['a', 'b c ']");
    assert_eq!(ret("def main():\n    return ' a b c '.rsplit(None, 1)\n", "main()"), "[' a b', 'c']");
    assert_eq!(ret("def main():\n    return 'hello world'.title()\n", "main()"), "'Hello World'");
    assert_eq!(ret("def main():\n    return '-'.join(['a', 'b'])\n", "main()"), "'a-b'");
}

#[test]
fn python_arithmetic() {
    assert_eq!(ret("def main():\n    return -7 // 2, -7 % 2, 7 / 2, 2 ** 100\n", "main()"), "(-4, 1, 3.5, 1267650600228229401496703205376)");
    assert_eq!(ret("def main():\n    return round(2.5), round(3.5), round(0.125, 2)\n", "main()"), "(2, 4, 0.12)");
    assert_eq!(ret("def main():\n    return 0.1 + 0.2\n", "main()"), "0.30000000000000004");
    assert_eq!(raised("def main():\n    return 1 / 0\n", "main()"), "ZeroDivisionError('division by zero')");
    assert_eq!(raised("def main():\n    return [1][3]\n", "main()"), "IndexError('list index out of range')");
    assert_eq!(raised("def main():\n    return {}['k']\n", "main()"), "KeyError('k')");
}

#[test]
fn arity_errors_match_python() {
    assert_eq!(
        raised("def f(a, b):\n    return a\n\ndef main():\n    return f(1)\n", "main()"),
        "TypeError(\"f() missing 1 required positional argument: 'b'\")"
    );
    assert_eq!(
        raised("def f(a):\n    return a\n\ndef main():\n    return f(1, 2)\n", "main()"),
        "TypeError('f() takes 1 positional argument but 2 were given')"
    );
}

#[test]
fn sets_keep_insertion_order() {
    assert_eq!(ret("def main():\n    s = {3, 1, 2}\n    s.add(0)\n    return s | {9, 1}\n", "main()"), "{3, 1, 2, 0, 9}");
    assert_eq!(ret("def main():\n    return {3, 1, 2} - {1}\n", "main()"), "{3, 2}");
}

#[test]
fn sorted_is_stable_with_reverse() {
    let src = "def main():\n    xs = [(1, 'a'), (0, 'b'), (1, 'c')]\n    return sorted(xs, key=lambda p: p[0], reverse=True)\n";
    assert_eq!(ret(src, "main()"), "[(1, 'a'), (1, 'c'), (0, 'b')]");
}

#[test]
fn deep_recursion_raises() {
    let src = "def r(n):\n    return r(n + 1)\n\ndef main():\n    return r(0)\n";
    let out = evaluate(&SourceProgram::new(src), "main()", 1_000_000).unwrap();
    match out {
        Outcome::Raised { kind, .. } => assert_eq!(kind, "RecursionError"),
        other => panic!("{other}"),
    }
}

#[test]
fn call_function_with_values() {
    let src = "def add(a, b=10):\n    return a + b\n";
    let out = call_function(&SourceProgram::new(src), "add", &[Value::int(5)], 100).unwrap();
    assert_eq!(out, Outcome::Returned(Value::int(15)));
}

#[test]
fn bad_entry_is_reported() {
    let err = execute_traced(&SourceProgram::new("def main():\n    return 1\n"), "nope()", 10).unwrap_err();
    assert!(matches!(err, TraceError::BadEntry { .. }));
}

#[test]
fn traced_and_untraced_agree() {
    let src = "def main():\n    d = {}\n    for w in 'the cat the'.split():\n        d[w] = d.get(w, 0) + 1\n    return sorted(d.items())\n";
    let doc = trace(src, "main()");
    let out = evaluate(&SourceProgram::new(src), "main()", DEFAULT_STEP_CEILING).unwrap();
    assert_eq!(Outcome::Returned(doc.final_return.unwrap()), out);
}

#[test]
fn deterministic() {
    let a = serialize_trace(&trace(GOLDEN_PROGRAM, "main()"));
    let b = serialize_trace(&trace(GOLDEN_PROGRAM, "main()"));
    assert_eq!(a, b);
}
