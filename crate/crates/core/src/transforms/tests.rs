use super::*;
use crate::minipy::{parse_source, unparse, SourceProgram};
use crate::value::Value;

fn body_of(src: &str) -> Vec<crate::minipy::Stmt> {
    let m = parse_source(src).unwrap();
    match &m.body[0].kind {
        crate::minipy::StmtKind::FunctionDef(d) => d.body.clone(),
        _ => panic!("expected a def"),
    }
}

fn decompose(src: &str) -> Module {
    decompose_expressions(&parse_source(src).unwrap(), &TransformConfig::default())
}

fn expand(src: &str, cfg: &TransformConfig) -> (Module, ExpansionReport) {
    expand_string_ops_with_report(&parse_source(src).unwrap(), cfg)
}

fn program(m: &Module) -> SourceProgram {
    SourceProgram::new(unparse(m))
}

#[test]
fn append_of_tuple_example() {
    let out = decompose("def f(nums, output, n):\n    output.append((nums.count(n), n))\n");
    let expected = body_of("def g():\n    _t0 = nums.count(n)\n    _t1 = (_t0, n)\n    output.append(_t1)\n");
    let crate::minipy::StmtKind::FunctionDef(d) = &out.body[0].kind else { panic!() };
    assert_eq!(d.body, expected);
}

#[test]
fn atomic_assignment_untouched() {
    let src = "def f(x):\n    y = x\n    return y\n";
    assert_eq!(decompose(src), parse_source(src).unwrap());
}

#[test]
fn infinite_threshold_is_identity() {
    let src = "def f(a, b):\n    return g(h(a) + [b, a * 2][0])\n";
    let cfg = TransformConfig { complexity_threshold: usize::MAX, ..TransformConfig::default() };
    let m = parse_source(src).unwrap();
    assert_eq!(decompose_expressions(&m, &cfg), m);
}

#[test]
fn temps_skip_existing_names() {
    let out = decompose("def f(_t0, _t3):\n    return abs(_t0 + _t3)\n");
    let text = unparse(&out);
    assert!(text.contains("_t4 = _t0 + _t3"), "{text}");
    let again = decompose_expressions(&out, &TransformConfig::default());
    assert!(!unparse(&again).contains("_t4 = _t0 + _t3\n    _t4"));
}

#[test]
fn module_level_code_untouched() {
    let src = "TABLE = [len('ab'), 2]\n\ndef f(x):\n    return x\n";
    assert_eq!(decompose(src), parse_source(src).unwrap());
}

const COUNTER: &str = "def main():
    log = []
    def tick(x):
        log.append(x)
        return x
    a = tick(1) + tick(2) * tick(3)
    b = [tick(4), tick(5) and tick(6), tick(7)]
    c = tick(8) if tick(0) else tick(9)
    d = {tick(10): tick(11), 'k': [tick(12)][0]}
    e = tick(13) < tick(14) < tick(15)
    return (a, b, c, d, e, log)
";

#[test]
fn evaluation_order_preserved() {
    let orig = SourceProgram::new(COUNTER);
    for threshold in [2, 3, 4, 6] {
        let cfg = TransformConfig { complexity_threshold: threshold, ..TransformConfig::default() };
        let m = decompose_expressions(&orig.parse().unwrap(), &cfg);
        let report = verify_equivalence(&orig, &program(&m), "main", &[vec![]]);
        assert!(report.passed, "threshold {threshold}: {:?}\n{}", report.cases, unparse(&m));
    }
    let m = decompose(COUNTER);
    assert!(unparse(&m).contains("_t"), "nothing extracted");
}

#[test]
fn if_and_for_heads_extracted_while_kept() {
    let src = "def f(xs):
    total = 0
    for x in sorted(xs[1:]):
        if abs(x - 1) > 2:
            total += x
        elif len(str(x)) > 1:
            total -= 1
    while len(xs[1:]) > 0:
        xs = xs[1:]
    return total
";
    let orig = SourceProgram::new(src);
    let m = decompose(src);
    let text = unparse(&m);
    assert!(text.contains("while len(xs[1:]) > 0:"), "{text}");
    assert!(text.contains("for x in sorted(_t"), "{text}");
    let inputs: Vec<Vec<Value>> = vec![
        vec![Value::List(vec![Value::int(5), Value::int(-3), Value::int(12)])],
        vec![Value::List(vec![])],
        vec![Value::List(vec![Value::int(1), Value::int(2), Value::int(30)])],
    ];
    assert!(verify_equivalence(&orig, &program(&m), "f", &inputs).passed);
}

fn single_char_cfg(names: &[&str]) -> TransformConfig {
    TransformConfig {
        assume_single_char: names.iter().map(|s| s.to_string()).collect(),
        ..TransformConfig::default()
    }
}

#[test]
fn index_expansion_example() {
    let src = "def f(text, char):\n    pos = text.index(char)\n    return pos\n";
    let (m, report) = expand(src, &single_char_cfg(&["char"]));
    let expected = body_of(
        "def g():
    _t0 = list(text)
    _t1 = -1
    for _t2 in range(len(_t0)):
        if _t0[_t2] == char:
            _t1 = _t2
            break
    if _t1 == -1:
        raise ValueError(\"substring not found\")
    pos = _t1
    return pos
",
    );
    let crate::minipy::StmtKind::FunctionDef(d) = &m.body[0].kind else { panic!() };
    assert_eq!(d.body, expected);
    assert_eq!(report.expanded(), 1);

    let orig = SourceProgram::new(src);
    let rep = verify_equivalence(
        &orig,
        &program(&m),
        "f",
        &[vec![Value::str("hello"), Value::str("l")], vec![Value::str("hello"), Value::str("z")]],
    );
    assert!(rep.passed);
    assert_eq!(rep.cases[0].verdict, CaseVerdict::Equal);
    assert_eq!(rep.cases[0].original, "2");
    assert_eq!(rep.cases[1].verdict, CaseVerdict::SameException);
}

#[test]
fn name_without_guarantee_is_not_a_site() {
    let (_, report) = expand("def f(text, char):\n    return text.index(char)\n", &TransformConfig::default());
    assert!(report.sites.is_empty());
}

#[test]
fn off_by_one_loop_is_caught() {
    let src = "def f(text, char):\n    return text.index(char)\n";
    let (m, _) = expand(src, &single_char_cfg(&["char"]));
    let broken = unparse(&m).replace("range(len(_t0))", "range(len(_t0) - 1)");
    assert_ne!(broken, unparse(&m));
    let rep = verify_equivalence(
        &SourceProgram::new(src),
        &SourceProgram::new(broken),
        "f",
        &[vec![Value::str("hello"), Value::str("o")]],
    );
    assert!(!rep.passed);
    assert_eq!(rep.mismatches().count(), 1);
}

#[test]
fn every_operation_matches_builtin() {
    let src = "def f(s):
    a = s.find('x')
    b = s.rfind('a')
    c = s.count('a')
    d = s.replace('a', '3')
    e = 'n' in s
    g = 'q' not in s
    h = s.rindex('n') if 'n' in s else -2
    return (a, b, c, d, e, g, h)
";
    let (m, report) = expand(src, &TransformConfig::default());
    assert!(report.expanded() >= 6, "{report:?}");
    let inputs: Vec<Vec<Value>> = ["banana", "", "xax", "qqq", "nan"].iter().map(|s| vec![Value::str(*s)]).collect();
    let rep = verify_equivalence(&SourceProgram::new(src), &program(&m), "f", &inputs);
    assert!(rep.passed, "{:?}", rep.cases);
    let banana = crate::tracer::call_function(&program(&m), "f", &inputs[0], VERIFY_STEP_CEILING).unwrap();
    assert!(banana.to_string().contains("'b3n3n3'"));
    assert!(banana.to_string().starts_with("(-1, 5, 3,"));
}

#[test]
fn disabled_ops_stay() {
    let cfg = TransformConfig {
        string_ops_enabled: [StringOp::Count].into_iter().collect(),
        ..TransformConfig::default()
    };
    let (m, report) = expand("def f(s):\n    return s.find('a') + s.count('a')\n", &cfg);
    let text = unparse(&m);
    assert!(text.contains("s.find('a')"));
    assert_eq!(report.expanded(), 1);
}

#[test]
fn unexpandable_sites_reported() {
    let src = "def f(xs, s):
    n = [x.count('a') for x in xs]
    while s.find('z') >= 0:
        s = s[1:]
    m = len(s) > 0 and s.index('b') == 0
    return (n, s, m)
";
    let (m, report) = expand(src, &TransformConfig::default());
    assert_eq!(report.expanded(), 0);
    let reasons: Vec<&str> = report.skipped().filter_map(|s| s.reason.as_deref()).collect();
    assert_eq!(reasons.len(), 3, "{reasons:?}");
    assert!(reasons[0].contains("comprehension"));
    assert!(reasons[1].contains("loop condition"));
    assert!(reasons[2].contains("conditionally"));
    assert_eq!(m, parse_source(src).unwrap());
}

#[test]
fn earlier_calls_move_with_the_site() {
    let src = "def f(s):
    log = []
    def t(x):
        log.append(x)
        return x
    r = t(s.upper()) + str(s.count('a')) + t('!')
    return (r, log)
";
    let (m, report) = expand(src, &TransformConfig::default());
    assert_eq!(report.expanded(), 1);
    let rep = verify_equivalence(&SourceProgram::new(src), &program(&m), "f", &[vec![Value::str("banana")]]);
    assert!(rep.passed, "{:?}\n{}", rep.cases, unparse(&m));
}

#[test]
fn inflation_ratios() {
    let chars = |s: &str| s.chars().count();
    let orig = SourceProgram::new("def f(s):\n    return s.count('a')\n\ndef main():\n    return f('abracadabr')\n");
    let (m, _) = expand(&orig.source_text, &TransformConfig::default());
    let same = trace_inflation(&orig, &orig, "main()", &chars).unwrap();
    assert_eq!(same, 1.0);
    let ratio = trace_inflation(&orig, &program(&m), "main()", &chars).unwrap();
    assert!(ratio > 1.0, "{ratio}");
}

#[test]
fn string_op_names() {
    for op in StringOp::ALL {
        assert_eq!(op.as_str().parse::<StringOp>().unwrap(), op);
    }
    assert!("split".parse::<StringOp>().is_err());
}
