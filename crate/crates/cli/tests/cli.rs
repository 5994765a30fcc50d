use std::path::Path;
use std::process::{Command, Output};

const GOLDEN_PROGRAM: &str = include_str!("../../core/tests/golden/worked_example.py");
const GOLDEN_TRACE: &str = include_str!("../../core/tests/golden/worked_example.trace");

fn tb(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tracebench"))
        .args(args)
        .current_dir(dir)
        .env_remove("TRACEBENCH_API_TOKEN")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn help_everywhere_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tb(dir.path(), &["--help"]).status.code(), Some(0));
    for sub in ["gen", "trace", "transform", "tokscan", "eval", "report"] {
        let o = tb(dir.path(), &[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
        assert!(stdout(&o).contains("Usage"), "{sub}");
    }
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = tb(dir.path(), &["gen", "--family", "zoo", "--category", "bitwise", "--count", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--seed"));
    assert_eq!(tb(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(tb(dir.path(), &["gen", "--family", "nope", "--seed", "1"]).status.code(), Some(2));
}

#[test]
fn io_errors_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = tb(dir.path(), &["trace", "missing_prog.py"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing_prog.py"), "{}", stderr(&o));
    let o = tb(dir.path(), &["report", "no_records.jsonl"]);
    assert!(stderr(&o).contains("no_records.jsonl"));
}

#[test]
fn gen_zoo_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["gen", "--family", "zoo", "--category", "bitwise", "--depth", "5", "--count", "10", "--seed", "3"];
    let o = tb(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 10);
    for l in &lines {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert_eq!(v["depth"], 5);
        let r = v["expected_rendering"].as_str().unwrap();
        assert!(!r.is_empty() && r.trim_start_matches('-').chars().all(|c| c.is_ascii_digit()), "{r}");
    }
    // same flags, same bytes
    assert_eq!(stdout(&tb(dir.path(), &args)), out);
}

#[test]
fn gen_s5_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = tb(dir.path(), &["gen", "--family", "s5", "--ops", "128", "--count", "4", "--seed", "7", "-o", "bench.jsonl"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("bench.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().all(|l| l.contains("\"depth\":128")));
}

#[test]
fn trace_reproduces_the_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("prog.py"), GOLDEN_PROGRAM).unwrap();
    let o = tb(dir.path(), &["trace", "prog.py", "--entry", "main()", "--budget", "8192"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), GOLDEN_TRACE);

    let cut = tb(dir.path(), &["trace", "prog.py", "--budget", "20", "--tokenizer", "bytes"]);
    assert_eq!(cut.status.code(), Some(0));
    assert!(stdout(&cut).len() < GOLDEN_TRACE.len());
}

#[test]
fn transform_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let src = "def f(s, c):\n    return s.index(c) + len(s.replace(c, 'xy'))\n";
    std::fs::write(dir.path().join("in.py"), src).unwrap();
    let o = tb(
        dir.path(),
        &[
            "transform", "--decompose", "--expand-strings", "in.py", "-o", "out.py", "--verify",
            "--call", "f('banana', 'n')", "--call", "f('banana', 'z')", "--report", "eq.json",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = std::fs::read_to_string(dir.path().join("out.py")).unwrap();
    assert_ne!(out, src);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("eq.json")).unwrap()).unwrap();
    assert_eq!(report[0]["passed"], true);
    assert_eq!(report[0]["cases"][1]["verdict"], "same_exception");

    let o = tb(dir.path(), &["transform", "in.py"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tokscan_bytes_model_never_finds_discontinuities() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("pairs.jsonl"),
        "{\"pattern\": \"-.\", \"context\": \"a-.-.b\"}\n[\" B \", \" BaB \"]\n",
    )
    .unwrap();
    let o = tb(dir.path(), &["tokscan", "--model", "bytes", "--pairs", "pairs.jsonl", "-o", "findings.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("2 pairs, 1 without a token match, 0 discontinuities"));
    let f: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("findings.json")).unwrap()).unwrap();
    assert_eq!(f["findings"].as_array().unwrap().len(), 2);
}

#[test]
fn eval_with_mock_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    for (fam, extra) in [("zoo", vec!["--category", "list", "--depth", "2"]), ("s5", vec!["--ops", "8"])] {
        let mut args = vec!["gen", "--family", fam, "--count", "3", "--seed", "11", "-o"];
        let name = format!("{fam}.jsonl");
        args.push(&name);
        args.extend(extra);
        assert_eq!(tb(p, &args).status.code(), Some(0));
    }
    let o = tb(p, &["eval", "--bench", "zoo.jsonl", "--mock", "oracle", "--out", "records.jsonl", "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("3 items: 100.0% correct"), "{}", stdout(&o));

    let o = tb(p, &["eval", "--bench", "s5.jsonl", "--mock", "oracle", "--mode", "teacher-forcing", "--out", "tf.jsonl"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("100.0% correct"));

    let o = tb(p, &["report", "records.jsonl", "--format", "html", "-o", "report.html"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let html = std::fs::read_to_string(p.join("report.html")).unwrap();
    assert_eq!(html.matches("<details>").count(), 3);
    let o = tb(p, &["report", "tf.jsonl", "--format", "json"]);
    let j: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(j["summary"]["overall"]["step_accuracy"], 100.0);

    // eval needs a model
    assert_eq!(tb(p, &["eval", "--bench", "zoo.jsonl"]).status.code(), Some(2));
}

#[test]
fn eval_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(tb(p, &["gen", "--family", "s5", "--ops", "64", "--count", "1", "--seed", "2", "-o", "b.jsonl"]).status.code(), Some(0));
    // the oracle cannot finish a 64-op trace in 50 tokens
    let o = tb(p, &["eval", "--bench", "b.jsonl", "--mock", "oracle", "--max-tokens", "50"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stdout(&o).contains("100.0% truncated"));
}

#[test]
fn endpoint_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("cfg.toml"), "base_url = \"http://127.0.0.1:9\"\nmodel = m\nmax_tokens = many\n").unwrap();
    std::fs::write(p.join("b.jsonl"), "").unwrap();
    let o = tb(p, &["eval", "--bench", "b.jsonl", "--endpoint", "cfg.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}
