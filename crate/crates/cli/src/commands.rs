use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use tracebench_core::benchgen::{from_jsonl, gen_s5_program, gen_zoo_item, to_jsonl, BenchmarkItem, Category, Family};
use tracebench_core::minipy::{literal_eval, parse_expr, unparse, unparse_expr, Arg, ExprKind, SourceProgram};
use tracebench_core::toklab::scan_discontinuities;
use tracebench_core::transforms::{decompose_expressions, expand_string_ops, verify_equivalence, TransformConfig};
use tracebench_core::tracer::{execute_traced, serialize_trace};
use tracebench_core::Value;
use tracebench_harness::intervention::rerun_failures;
use tracebench_harness::mock::MockServer;
use tracebench_harness::{
    emit_report, run_eval, CompletionModel, EvalConfig, EvalMode, EvalRecord, EvalSettings, HttpModel,
    ModelEndpoint, OracleModel, ReportFormat, S5Extraction, Verdict,
};
use tracing::{info, warn};

use crate::io::{bad_input, load_tokenizer, read_text, write_out};
use crate::{
    CliError, EvalArgs, Extraction, GenArgs, MockKind, ReportArgs, Status, TokscanArgs, TraceArgs, TransformArgs,
};

fn parse_range(s: &str) -> Result<(i64, i64), CliError> {
    let bad = || CliError::Usage(format!("--init-range expects LO,HI, got `{s}`"));
    let (lo, hi) = s.split_once(',').ok_or_else(bad)?;
    let (lo, hi) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

pub(crate) fn gen(a: GenArgs) -> Result<Status, CliError> {
    let mut items = Vec::new();
    let seeds = (0..a.count as u64).map(|i| a.seed.wrapping_add(i));
    match a.family {
        Family::S5 => {
            if a.category.is_some() {
                return Err(CliError::Usage("s5 takes --ops and --vars, not --category".into()));
            }
            let range = parse_range(&a.init_range)?;
            for seed in seeds {
                items.push(gen_s5_program(a.vars, a.ops, seed, range)?);
            }
        }
        Family::Zoo | Family::StringComp => {
            let cats: Vec<Category> = match (&a.category, a.family) {
                (Some(c), _) => vec![c.parse()?],
                (None, Family::StringComp) => vec![Category::String],
                (None, _) => Category::ALL.to_vec(),
            };
            if a.family == Family::StringComp && cats != [Category::String] {
                return Err(CliError::Usage("string_comp only has the `string` category".into()));
            }
            for c in cats {
                for seed in seeds.clone() {
                    items.push(gen_zoo_item(c, a.depth, seed)?);
                }
            }
        }
        Family::External => {
            return Err(CliError::Usage("external items are imported, not generated".into()));
        }
    }
    info!(count = items.len(), "generated items");
    write_out(a.output.as_deref(), &to_jsonl(&items))?;
    Ok(Status::Ok)
}

fn load_program(path: &Path) -> Result<SourceProgram, CliError> {
    let text = read_text(path)?;
    Ok(SourceProgram::new(text).with_file_name(path.display().to_string()))
}

pub(crate) fn trace(a: TraceArgs) -> Result<Status, CliError> {
    let program = load_program(&a.program)?;
    let tok = load_tokenizer(&a.tokenizer)?;
    let doc = execute_traced(&program, &a.entry, a.ceiling)
        .map_err(|e| bad_input(&a.program, e))?
        .with_token_budget(a.budget, &tok);
    if let Some(at) = doc.truncated_at {
        warn!(event = at, budget = a.budget, "trace truncated");
    }
    let out = if a.json {
        serde_json::to_string_pretty(&doc.to_json()).expect("json") + "\n"
    } else {
        serialize_trace(&doc)
    };
    write_out(None, &out)?;
    Ok(Status::Ok)
}

/// `f(1, 'a')` into the function name and literal arguments.
fn parse_call(call: &str) -> Result<(String, Vec<Value>), CliError> {
    let usage = |m: &str| CliError::Usage(format!("--call `{call}`: {m}"));
    let expr = parse_expr(call).map_err(|e| usage(&e.to_string()))?;
    let ExprKind::Call { func, args } = expr.kind else {
        return Err(usage("not a call"));
    };
    let ExprKind::Name(name) = func.kind else {
        return Err(usage("callee must be a plain name"));
    };
    let values = args
        .iter()
        .map(|arg| match arg {
            Arg::Positional(e) => literal_eval(&unparse_expr(e)).map_err(|e| usage(&e.to_string())),
            Arg::Keyword(..) => Err(usage("keyword arguments are not supported")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((name, values))
}

pub(crate) fn transform(a: TransformArgs) -> Result<Status, CliError> {
    if !a.decompose && !a.expand_strings {
        return Err(CliError::Usage("nothing to do: pass --decompose and/or --expand-strings".into()));
    }
    let original = load_program(&a.input)?;
    let module = original.parse().map_err(|e| bad_input(&a.input, e))?;
    let mut cfg = TransformConfig::default();
    if let Some(t) = a.threshold {
        cfg.complexity_threshold = t;
    }
    let mut module = module;
    if a.decompose {
        module = decompose_expressions(&module, &cfg);
    }
    if a.expand_strings {
        module = expand_string_ops(&module, &cfg);
    }
    let text = unparse(&module);
    write_out(a.output.as_deref(), &text)?;
    if !a.verify {
        return Ok(Status::Ok);
    }

    let calls = if a.calls.is_empty() { vec!["main()".to_string()] } else { a.calls.clone() };
    let mut by_function: BTreeMap<String, Vec<Vec<Value>>> = BTreeMap::new();
    for c in &calls {
        let (name, args) = parse_call(c)?;
        by_function.entry(name).or_default().push(args);
    }
    let transformed = SourceProgram::new(text);
    let reports: Vec<_> = by_function
        .iter()
        .map(|(f, inputs)| verify_equivalence(&original, &transformed, f, inputs))
        .collect();
    let json = serde_json::to_string_pretty(&reports).expect("json") + "\n";
    match &a.report {
        Some(p) => write_out(Some(p), &json)?,
        None => eprint!("{json}"),
    }
    let failed = reports.iter().map(|r| r.mismatches().count()).sum::<usize>();
    Ok(if failed == 0 { Status::Ok } else { Status::Failures(failed) })
}

fn read_pairs(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = read_text(path)?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = |m: String| bad_input(path, format!("line {}: {m}", i + 1));
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| at(e.to_string()))?;
        let get = |k: &str, idx: usize| {
            v.get(k)
                .or_else(|| v.get(idx))
                .and_then(|s| s.as_str())
                .map(String::from)
                .ok_or_else(|| at(format!("missing `{k}`")))
        };
        pairs.push((get("pattern", 0)?, get("context", 1)?));
    }
    Ok(pairs)
}

fn shorten(s: &str, n: usize) -> String {
    let esc: String = s.escape_debug().collect();
    if esc.chars().count() <= n {
        esc
    } else {
        esc.chars().take(n - 3).collect::<String>() + "..."
    }
}

pub(crate) fn tokscan(a: TokscanArgs) -> Result<Status, CliError> {
    let tok = load_tokenizer(&a.model)?;
    let pairs = read_pairs(&a.pairs)?;
    let (findings, summary) = scan_discontinuities(&tok, &pairs);
    let json = serde_json::json!({ "summary": summary, "findings": findings });
    let mut table = format!("{:<24} {:<32} {:>8} {:>10} {:>13}\n", "pattern", "context", "tokens", "contiguous", "discontinuity");
    for f in &findings {
        table.push_str(&format!(
            "{:<24} {:<32} {:>8} {:>10} {:>13}\n",
            shorten(&f.pattern, 24),
            shorten(&f.context, 32),
            f.pattern_tokens.len(),
            if f.contiguous_match { "yes" } else { "no" },
            if f.is_discontinuity() { "yes" } else { "" },
        ));
    }
    table.push_str(&format!(
        "{} pairs, {} without a token match, {} discontinuities\n",
        summary.pairs, summary.no_token_match, summary.discontinuities
    ));
    let json = serde_json::to_string_pretty(&json).expect("json") + "\n";
    match &a.output {
        Some(p) => {
            write_out(Some(p), &json)?;
            write_out(None, &table)?;
        }
        None => {
            write_out(None, &json)?;
            eprint!("{table}");
        }
    }
    Ok(Status::Ok)
}

fn split_results(results: Vec<Result<EvalRecord, tracebench_harness::HarnessError>>) -> (Vec<EvalRecord>, usize) {
    let mut records = Vec::new();
    let mut errors = 0;
    for r in results {
        match r {
            Ok(r) => records.push(r),
            Err(e) => {
                warn!(error = %e, "item failed");
                errors += 1;
            }
        }
    }
    (records, errors)
}

pub(crate) fn eval(a: EvalArgs) -> Result<Status, CliError> {
    let text = read_text(&a.bench)?;
    let items: Vec<BenchmarkItem> = from_jsonl(&text).map_err(|e| bad_input(&a.bench, e))?;
    let config = a.endpoint.as_deref().map(EvalConfig::load).transpose()?;

    // keeps the mock server alive for the whole run
    let mut _server = None;
    let model: Box<dyn CompletionModel> = match (&config, a.mock) {
        (Some(cfg), _) => Box::new(HttpModel::new(cfg.endpoint.clone())?),
        (None, Some(MockKind::Oracle)) => {
            let server = MockServer::start(Arc::new(OracleModel::new()))
                .map_err(|source| CliError::Io { path: "<mock server>".into(), source })?;
            let ep = ModelEndpoint::new(server.url(), "oracle", 1 << 20);
            _server = Some(server);
            Box::new(HttpModel::new(ep)?)
        }
        (None, None) => return Err(CliError::Usage("pass --endpoint or --mock".into())),
    };

    let mut settings = EvalSettings::default();
    settings.mode = a.mode.or(config.as_ref().and_then(|c| c.mode)).unwrap_or(EvalMode::Baseline);
    settings.jobs = a.jobs.or(config.as_ref().and_then(|c| c.jobs)).unwrap_or(1).max(1);
    settings.kind = a.kind;
    settings.extraction = match a.extraction {
        Extraction::LastState => S5Extraction::LastState,
        Extraction::Printed => S5Extraction::PrintedValue,
    };
    if let Some(m) = a.max_tokens.or(config.as_ref().map(|c| c.endpoint.max_tokens)) {
        settings.max_tokens = m;
    }

    let (mut records, mut errors) = split_results(run_eval(&items, model.as_ref(), &settings));
    if a.intervene {
        let (more, more_errors) =
            split_results(rerun_failures(&records, model.as_ref(), &settings, &TransformConfig::default()));
        records.extend(more);
        errors += more_errors;
    }

    if let Some(out) = &a.out {
        let mut lines = String::new();
        for r in &records {
            lines.push_str(&serde_json::to_string(r).expect("records serialize"));
            lines.push('\n');
        }
        write_out(Some(out), &lines)?;
    }
    let summary = tracebench_harness::report::summarize(&records).overall;
    println!(
        "{} items: {:.1}% correct, {:.1}% wrong, {:.1}% truncated{}",
        summary.samples,
        summary.correct_pct,
        summary.wrong_pct,
        summary.truncated_pct,
        if errors > 0 { format!(", {errors} errors") } else { String::new() }
    );
    let failures = errors
        + records
            .iter()
            .filter(|r| r.variant == tracebench_harness::Variant::Original && r.verdict != Verdict::Correct)
            .count();
    Ok(if failures == 0 { Status::Ok } else { Status::Failures(failures) })
}

pub(crate) fn report(a: ReportArgs) -> Result<Status, CliError> {
    let text = read_text(&a.records)?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: EvalRecord =
            serde_json::from_str(line).map_err(|e| bad_input(&a.records, format!("line {}: {e}", i + 1)))?;
        records.push(r);
    }
    let out = emit_report(&records, a.format);
    write_out(a.output.as_deref(), &out)?;
    if a.format == ReportFormat::Json && a.output.is_none() {
        write_out(None, "\n")?;
    }
    Ok(Status::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calls_parse_to_literals() {
        let (name, args) = parse_call("f('ab', [1, 2], -3)").unwrap();
        assert_eq!(name, "f");
        assert_eq!(args.iter().map(Value::repr).collect::<Vec<_>>(), ["'ab'", "[1, 2]", "-3"]);
        assert!(parse_call("x + 1").is_err());
        assert!(parse_call("f(y=1)").is_err());
        assert!(parse_call("f(g(1))").is_err());
    }

    #[test]
    fn init_ranges() {
        assert_eq!(parse_range("1,9").unwrap(), (1, 9));
        assert_eq!(parse_range(" -5 , 5").unwrap(), (-5, 5));
        assert!(parse_range("9,1").is_err());
        assert!(parse_range("7").is_err());
    }
}
