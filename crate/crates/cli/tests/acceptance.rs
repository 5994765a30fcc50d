//! End-to-end acceptance checks. Each criterion runs on its own thread and
//! prints one PASS/FAIL line; the test fails if any criterion does.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tracebench_core::benchgen::{
    compose_permutations, gen_s5_program, gen_zoo_item, sample_zoo_input, table1_fixture, trace_states,
    BenchmarkItem, Category, Family, S5Spec,
};
use tracebench_core::minipy::{unparse, SourceProgram};
use tracebench_core::toklab::{default_tokenizer, is_token_subsequence, scan_discontinuities, train_bpe, TokenizerModel};
use tracebench_core::transforms::{
    decompose_expressions, expand_string_ops, inflation_under_budget, verify_equivalence, CaseVerdict, TransformConfig,
};
use tracebench_core::tracer::{evaluate, evaluate_full, execute_traced, serialize_trace, Outcome, DEFAULT_STEP_CEILING};
use tracebench_core::Value;
use tracebench_harness::eval::s5_state_alignment;
use tracebench_harness::taxonomy::{distribution_of, synthetic_pairs};
use tracebench_harness::{
    evaluate_baseline, parse_answer, run_eval, teacher_force_eval, CorruptingS5Model, EvalMode, EvalSettings, HttpModel,
    MockServer, ModelEndpoint, OracleModel, ParsedAnswer, PromptKind, S5Extraction, Verdict,
};

const GOLDEN_PROGRAM: &str = include_str!("../../core/tests/golden/worked_example.py");
const GOLDEN_TRACE: &str = include_str!("../../core/tests/golden/worked_example.trace");

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>, what: &str) -> Result<T, String> {
    r.map_err(|e| format!("{what}: {e}"))
}

fn golden_trace() -> Check {
    let prog = SourceProgram::new(GOLDEN_PROGRAM);
    let doc = ok(execute_traced(&prog, "main()", DEFAULT_STEP_CEILING), "trace")?;
    let text = serialize_trace(&doc);
    ensure!(text == GOLDEN_TRACE, "trace differs:\n{text}");
    ensure!(doc.final_return == Some(Value::int(6)), "returned {:?}", doc.final_return);

    // the answer read back from a full completion
    let src = GOLDEN_PROGRAM.split("\ndef main").next().unwrap_or_default();
    let item = ok(BenchmarkItem::external("humaneval", SourceProgram::new(src), "f(1,3)", 0), "item")?;
    let prompt = ok(tracebench_harness::build_prompt(PromptKind::Humaneval, &item), "prompt")?;
    let completion = tracebench_harness::Completion {
        text: ok(OracleModel::new().ideal(&prompt), "oracle")?,
        finish_reason: tracebench_harness::FinishReason::Stop,
    };
    ensure!(completion.text.contains(GOLDEN_TRACE), "oracle completion does not embed the trace");
    let parsed = ok(parse_answer(PromptKind::Humaneval, &completion, S5Extraction::LastState), "answer")?;
    ensure!(parsed == ParsedAnswer::Value(Value::int(6)), "parsed {parsed:?}");
    Ok(format!("{} bytes, answer 6", text.len()))
}

/// Final state three ways: the trace, folding the permutations, and a
/// trace-free run of a variant that returns the whole state.
fn s5_three_ways(spec: &S5Spec) -> Result<Vec<i64>, String> {
    let n = spec.n_vars();
    let fold = ok(compose_permutations(&spec.ops, &spec.init), "fold")?;
    let text = spec.program_text();
    let prog = SourceProgram::new(text.clone());
    let doc = ok(execute_traced(&prog, "main()", DEFAULT_STEP_CEILING), "trace")?;
    ensure!(doc.completed(), "trace cut short");
    let traced = trace_states(&doc.events, n).pop().unwrap_or_default();
    ensure!(traced == fold, "trace {traced:?} vs fold {fold:?}");

    let vars = spec.vars().join(", ");
    let print_line = text.lines().find(|l| l.trim_start().starts_with("print(")).unwrap_or_default();
    let returning = SourceProgram::new(text.replacen(print_line, &format!("    return ({vars},)"), 1));
    let free = ok(evaluate(&returning, "execute_repl_trace()", DEFAULT_STEP_CEILING), "evaluate")?;
    let want = Value::Tuple(fold.iter().map(|&x| Value::int(x)).collect());
    ensure!(matches!(&free, Outcome::Returned(v) if v.py_eq(&want)), "trace-free {free} vs {}", want.repr());

    let printed = ok(evaluate_full(&prog, "main()", DEFAULT_STEP_CEILING), "evaluate")?.stdout;
    let q = spec.query;
    ensure!(printed == format!("{} = {}\n", spec.vars()[q], fold[q]), "printed {printed:?}");
    Ok(fold)
}

fn s5_triangulation() -> Check {
    let worked = "def execute_repl_trace():\n    a = 1\n    b = 2\n    c = 3\n    d = 4\n    e = 5\n    \
                  a, b, c, d, e = c, e, b, a, d\n    a, b, c, d, e = e, b, c, d, a\n    print(f\"c = {c}\")\n\n\
                  def main(): # << START_OF_TRACE\n    execute_repl_trace()\n";
    let spec = ok(S5Spec::from_program(worked), "worked example")?;
    let fin = s5_three_ways(&spec)?;
    ensure!(fin == [4, 5, 2, 1, 3], "worked example ends in {fin:?}");
    let mut checked = 1;
    for n in [8, 16, 32, 64, 128] {
        for seed in 0..100 {
            let item = ok(gen_s5_program(5, n, seed, (1, 9)), "generate")?;
            let spec = item.s5_spec().ok_or("s5 item without spec")?;
            s5_three_ways(&spec).map_err(|e| format!("{}: {e}", item.id()))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} programs agree"))
}

fn zoo_soundness() -> Check {
    let mut count = 0;
    for c in Category::ALL {
        for depth in 1..=5 {
            for seed in 0..100 {
                let it = ok(gen_zoo_item(c, depth, seed), &format!("{c} d{depth} s{seed}"))?;
                ensure!(it.depth == depth, "{}: depth {}", it.id(), it.depth);
                let ty = it.expected_output.type_name();
                ensure!(ty == c.value_type(), "{}: {ty} output", it.id());
                let doc = ok(execute_traced(&it.program, &it.entry_call, DEFAULT_STEP_CEILING), "trace")?;
                ensure!(doc.final_return.as_ref() == Some(&it.expected_output), "{}: trace disagrees", it.id());
                count += 1;
            }
        }
    }
    let fixture = ok(table1_fixture(), "fixture")?;
    for c in Category::ALL.into_iter().filter(|c| *c != Category::String) {
        let of_c: Vec<_> = fixture.iter().filter(|it| it.category == c.as_str()).collect();
        ensure!(of_c.len() == 10, "{c}: {} fixture items", of_c.len());
        ensure!(of_c.iter().all(|it| it.depth == 5 && it.family == Family::Zoo), "{c}: wrong parameters");
    }
    ensure!(fixture.len() == 70, "{} fixture items", fixture.len());
    Ok(format!("{count} items, 7x10 depth-5 fixture"))
}

/// Programs built around string methods, so misses show up.
const STRING_OP_PROGRAMS: [&str; 10] = [
    "def g(s):\n    return s.find('a')\n",
    "def g(s):\n    return s.index('a') * 2\n",
    "def g(s):\n    return s.rfind('b') - s.find('c')\n",
    "def g(s):\n    return s.rindex('c')\n",
    "def g(s):\n    return s.count('a') + len(s.replace('a', 'xy'))\n",
    "def g(s):\n    if 'b' in s:\n        return s.replace('b', '')\n    return s + '!'\n",
    "def g(s):\n    n = s.find('c') + s.count('b') * 3\n    return [n, s.index('b')]\n",
    "def g(s):\n    t = s.replace('c', 'ab')\n    return t.count('a') + t.rfind('a')\n",
    "def g(s):\n    return ('a' in s) == (s.find('a') >= 0)\n",
    "def g(s):\n    return s.rindex('a') - s.index('a')\n",
];

fn rewrite(src: &SourceProgram, cfg: &TransformConfig) -> Result<SourceProgram, String> {
    let m = ok(src.parse(), "parse")?;
    Ok(SourceProgram::new(unparse(&expand_string_ops(&decompose_expressions(&m, cfg), cfg))))
}

fn intervention_equivalence() -> Check {
    let cfg = TransformConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut programs = 0;
    let mut cases = 0;
    let (mut misses_find, mut misses_index) = (0, 0);

    for src in STRING_OP_PROGRAMS {
        let orig = SourceProgram::new(src);
        let out = rewrite(&orig, &cfg)?;
        ensure!(!out.source_text.contains(".index(") && !out.source_text.contains(".find("), "not expanded:\n{}", out.source_text);
        let inputs: Vec<Vec<Value>> = (0..20)
            .map(|_| {
                let len = rng.random_range(0..7);
                let s: String = (0..len).map(|_| ['a', 'b', 'c'][rng.random_range(0..3)]).collect();
                vec![Value::str(s)]
            })
            .collect();
        let rep = verify_equivalence(&orig, &out, "g", &inputs);
        ensure!(rep.passed, "{src}: {:?}", rep.mismatches().collect::<Vec<_>>());
        for c in &rep.cases {
            if c.verdict == CaseVerdict::Equal && c.original.starts_with("-1") && src.contains("find") {
                misses_find += 1;
            }
            if c.verdict == CaseVerdict::SameException && c.original.contains("ValueError") {
                misses_index += 1;
            }
        }
        programs += 1;
        cases += rep.cases.len();
    }

    'outer: for seed in 0.. {
        for c in Category::ALL {
            for depth in 1..=5 {
                if programs == 500 {
                    break 'outer;
                }
                let it = ok(gen_zoo_item(c, depth, seed), "generate")?;
                let out = rewrite(&it.program, &cfg)?;
                let inputs: Vec<Vec<Value>> = (0..20).map(|_| vec![sample_zoo_input(c, &mut rng)]).collect();
                let rep = verify_equivalence(&it.program, &out, "main_solution", &inputs);
                ensure!(rep.passed, "{}: {:?}", it.id(), rep.mismatches().collect::<Vec<_>>());
                programs += 1;
                cases += rep.cases.len();
            }
        }
    }
    ensure!(misses_find > 0, "no find miss exercised");
    ensure!(misses_index > 0, "no index ValueError exercised");
    Ok(format!("{programs} programs, {cases} cases, {misses_find} find misses, {misses_index} ValueErrors"))
}

fn trace_inflation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let input: String = (0..100).map(|_| (b'a' + rng.random_range(0..6u8)) as char).collect();
    let src = format!("def f(s):\n    return s.count('a')\n\ndef main(): # << START_OF_TRACE\n    return f('{input}')\n");
    let orig = SourceProgram::new(src);
    let cfg = TransformConfig::default();
    let out = rewrite(&orig, &cfg)?;
    let rep = ok(inflation_under_budget(&orig, &out, "main()", default_tokenizer(), 4096), "inflation")?;
    ensure!(!rep.original_truncated, "original truncated at {} tokens", rep.original_tokens);
    ensure!(rep.transformed_truncated, "transformed fits: {} tokens", rep.transformed_tokens);
    Ok(format!("{} -> {} tokens ({:.1}x) against 4096", rep.original_tokens, rep.transformed_tokens, rep.ratio))
}

fn tokenizer_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let toy = ok(train_bpe(&[".-", ".-", ".-", ".-", ".-", "-.", "-.", "-."], 2), "train")?;
    for tok in [default_tokenizer(), &toy] {
        for _ in 0..10_000 {
            let len = rng.random_range(0..48);
            let data: Vec<u8> = (0..len).map(|_| rng.random()).collect();
            let ids = tok.encode_bytes(&data);
            let back = ok(tok.decode_bytes(&ids), "decode")?;
            ensure!(back == data, "round trip lost {data:?}");
        }
    }

    let bytes = TokenizerModel::bytes_only();
    let alphabet = ['a', 'b', '-', '.', ' '];
    let mut word = |max: usize| -> String {
        let len = rng.random_range(0..=max);
        (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect()
    };
    for _ in 0..1000 {
        let (p, c) = (word(4), word(16));
        let f = is_token_subsequence(&bytes, &p, &c);
        ensure!(f.contiguous_match == c.contains(&p), "{p:?} in {c:?}");
    }

    let sep = toy.encode("-.");
    ensure!(sep.len() == 1, "\"-.\" is {} tokens", sep.len());
    let (findings, summary) = scan_discontinuities(&toy, &[("-.", "a-.-.b")]);
    ensure!(summary.discontinuities >= 1, "no discontinuity: {}", findings[0].explanation);
    ensure!(!findings[0].context_tokens.contains(&sep[0]), "separator token present in context");
    Ok("20000 round trips, 1000 substring pairs, toy discontinuity".into())
}

fn taxonomy_arithmetic() -> Check {
    let crux_bench = [
        ("str", 46.4), ("list", 24.6), ("int", 12.1), ("dict", 8.4),
        ("bool", 6.1), ("tuple", 2.0), ("bytes", 0.2), ("float", 0.1),
    ];
    let crux_fail = [("str", 72.8), ("list", 8.8), ("int", 11.4), ("bool", 3.5), ("tuple", 2.6), ("bytes", 0.9)];
    let he_bench = [
        ("str", 17.2), ("list", 24.6), ("int", 31.5), ("bool", 19.2),
        ("float", 1.4), ("tuple", 4.7), ("dict", 0.7), ("NoneType", 0.7),
    ];
    let he_fail = [("str", 44.0), ("list", 25.0), ("int", 18.8), ("bool", 6.2), ("float", 6.2)];
    let mut out = Vec::new();
    for (name, bench, fail, n, f, want) in [
        ("cruxeval", &crux_bench[..], &crux_fail[..], 1000, 125, 1.57),
        ("humaneval", &he_bench[..], &he_fail[..], 2000, 250, 2.56),
    ] {
        let pairs = synthetic_pairs(bench, fail, n, f).map_err(|e| format!("{name}: {e}"))?;
        let table = distribution_of(pairs.iter().map(|(t, v)| (t.as_str(), *v)));
        ensure!(table.samples == n && table.failures == f, "{name}: {} / {}", table.samples, table.failures);
        let ratio = table.row("str").and_then(|r| r.ratio).ok_or(format!("{name}: no str ratio"))?;
        ensure!((ratio - want).abs() <= 0.01, "{name}: str ratio {ratio:.4}, want {want}");
        out.push(format!("{name} str {ratio:.3}"));
    }
    Ok(out.join(", "))
}

fn closure_items() -> Result<Vec<BenchmarkItem>, String> {
    let mut items = Vec::new();
    for c in Category::ALL {
        for depth in 1..=3 {
            items.push(ok(gen_zoo_item(c, depth, depth as u64), "zoo")?);
        }
    }
    for n in [8, 16, 32] {
        items.push(ok(gen_s5_program(5, n, n as u64, (1, 9)), "s5")?);
    }
    let f = "def f(a,b):\n    y = a\n    for i in range(b):\n        y += y * i\n    return y\n";
    let g = "def f(s):\n    out = ''\n    for ch in s:\n        out = ch + out\n    return out.upper()\n";
    items.push(ok(BenchmarkItem::external("humaneval", SourceProgram::new(f), "f(1,3)", 0), "external")?);
    items.push(ok(BenchmarkItem::external("cruxeval", SourceProgram::new(g), "f('abc')", 1), "external")?);
    Ok(items)
}

fn harness_closure_and_corruption() -> Check {
    let server = ok(MockServer::start(Arc::new(OracleModel::new())), "mock server")?;
    let model = ok(HttpModel::new(ModelEndpoint::new(server.url(), "oracle", 1 << 20)), "client")?;
    let items = closure_items()?;
    let settings = EvalSettings { jobs: 4, max_tokens: 1 << 20, ..EvalSettings::default() };
    let mut scored = 0;
    for (item, r) in items.iter().zip(run_eval(&items, &model, &settings)) {
        let r = r.map_err(|e| format!("{}: {e}", item.id()))?;
        ensure!(r.verdict == Verdict::Correct, "{}: {} ({:?})", item.id(), r.verdict, r.parsed_answer);
        scored += 1;
    }
    let families: std::collections::HashSet<_> = items.iter().map(|i| i.family).collect();
    ensure!(families.len() == 4, "families covered: {families:?}");
    let tf = EvalSettings { mode: EvalMode::TeacherForcing, ..settings.clone() };
    let chat = EvalSettings { kind: Some(PromptKind::S5Chat), ..settings.clone() };
    for item in items.iter().filter(|i| i.family == Family::S5) {
        let r = ok(teacher_force_eval(item, &model, &tf), "teacher forcing")?;
        ensure!(r.step_accuracy() == Some(1.0), "{}: teacher-forced accuracy {:?}", item.id(), r.step_accuracy());
        let r = ok(evaluate_baseline(item, &model, &chat), "chat")?;
        ensure!(r.verdict == Verdict::Correct, "{}: chat prompt {}", item.id(), r.verdict);
        scored += 2;
    }

    let mut corrupted = 0;
    for (n, seed) in [(8, 1), (16, 3), (32, 9)] {
        let item = ok(gen_s5_program(5, n, seed, (1, 9)), "s5")?;
        for k in [1, n / 2, n] {
            let bad = CorruptingS5Model::new(k);
            let r = ok(evaluate_baseline(&item, &bad, &settings), "baseline")?;
            ensure!(r.first_bad_action == Some(k), "{}: first bad action {:?}, want {k}", item.id(), r.first_bad_action);
            let aligned = ok(s5_state_alignment(&item, &r.completion), "alignment")?;
            ensure!(aligned.len() == n, "{} states", aligned.len());
            for (i, &same) in aligned.iter().enumerate() {
                ensure!(same == (i + 1 < k), "{} k={k}: state after op {} matches={same}", item.id(), i + 1);
            }
            let r = ok(teacher_force_eval(&item, &bad, &tf), "teacher forcing")?;
            for s in r.per_step.as_deref().unwrap_or_default() {
                ensure!(s.matches == (s.step != k), "{} k={k}: teacher-forced step {} matches={}", item.id(), s.step, s.matches);
            }
            corrupted += 1;
        }
    }
    Ok(format!("{scored} oracle runs all correct, {corrupted} corruptions isolated"))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("golden trace", golden_trace),
        ("s5 oracle triangulation", s5_triangulation),
        ("composition zoo soundness", zoo_soundness),
        ("intervention equivalence", intervention_equivalence),
        ("trace inflation", trace_inflation),
        ("tokenizer", tokenizer_properties),
        ("taxonomy arithmetic", taxonomy_arithmetic),
        ("harness closure and corruption", harness_closure_and_corruption),
    ];
    let results: Vec<(Check, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|(_, f)| {
                s.spawn(move || {
                    let t = Instant::now();
                    let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
                    (r, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("criterion thread")).collect()
    });
    // write past libtest's capture so the lines show up in plain `cargo test` output
    use std::io::Write;
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err);
    let mut failed = Vec::new();
    for ((name, _), (r, secs)) in criteria.iter().zip(&results) {
        match r {
            Ok(detail) => { let _ = writeln!(err, "PASS  {name}: {detail} [{secs:.1}s]"); }
            Err(why) => {
                let _ = writeln!(err, "FAIL  {name}: {why} [{secs:.1}s]");
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
