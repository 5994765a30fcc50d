//! The `tracebench` command line: benchmark generation, tracing,
//! transforms, tokenizer scans, evaluation and reports.

mod commands;
mod io;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;
use tracebench_core::benchgen::{BenchError, Family};
use tracebench_core::toklab::TokError;
use tracebench_core::tracer::{TraceError, DEFAULT_STEP_CEILING, DEFAULT_TOKEN_BUDGET};
use tracebench_harness::{EvalMode, HarnessError, PromptKind, ReportFormat};

pub use io::load_tokenizer;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    BadInput { path: PathBuf, message: String },
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Tok(#[from] TokError),
}

/// What a finished command reports back; failures map to exit code 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Failures(usize),
}

#[derive(Debug, Parser)]
#[command(name = "tracebench", version, about = "Execution-trace benchmarks for code world models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate benchmark items as JSONL.
    Gen(GenArgs),
    /// Run a program and print its serialized trace.
    Trace(TraceArgs),
    /// Rewrite a program with temporaries and expanded string operations.
    Transform(TransformArgs),
    /// Check whether patterns keep their tokens inside contexts.
    Tokscan(TokscanArgs),
    /// Score a model on a benchmark file.
    Eval(EvalArgs),
    /// Render evaluation records as json, html or text.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    /// zoo, string_comp or s5
    #[arg(long)]
    family: Family,
    /// Zoo category; all categories when omitted.
    #[arg(long)]
    category: Option<String>,
    /// Composition depth (zoo, string_comp).
    #[arg(long, default_value_t = 1)]
    depth: usize,
    /// Number of swaps (s5).
    #[arg(long, default_value_t = 16)]
    ops: usize,
    /// Number of variables (s5).
    #[arg(long, default_value_t = 5)]
    vars: usize,
    /// Initial values are drawn from LO..=HI (s5).
    #[arg(long, value_name = "LO,HI", default_value = "1,9")]
    init_range: String,
    /// Items per category.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Seed of the first item; item i uses seed + i.
    #[arg(long)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TraceArgs {
    program: PathBuf,
    #[arg(long, default_value = "main()")]
    entry: String,
    /// Token budget; the trace is cut at the first event past it.
    #[arg(long, default_value_t = DEFAULT_TOKEN_BUDGET)]
    budget: usize,
    /// `default`, `bytes`, a directory with vocab.json and merges.txt, or a
    /// single model file.
    #[arg(long, default_value = "default")]
    tokenizer: String,
    #[arg(long, default_value_t = DEFAULT_STEP_CEILING)]
    ceiling: usize,
    /// Print the trace document as JSON instead.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct TransformArgs {
    input: PathBuf,
    #[arg(long)]
    decompose: bool,
    #[arg(long)]
    expand_strings: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Compare original and rewritten programs on the given calls.
    #[arg(long)]
    verify: bool,
    /// A call such as `f(1, 'ab')`; repeatable. Defaults to `main()`.
    #[arg(long = "call", value_name = "CALL")]
    calls: Vec<String>,
    #[arg(long)]
    threshold: Option<usize>,
    /// Where to write the equivalence report (stderr otherwise).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TokscanArgs {
    /// Same forms as `trace --tokenizer`.
    #[arg(long, default_value = "default")]
    model: String,
    /// JSONL of `{"pattern": .., "context": ..}` or `[pattern, context]`.
    #[arg(long)]
    pairs: PathBuf,
    /// Findings JSON goes here; stdout otherwise.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MockKind {
    /// Answers every prompt from the real trace.
    Oracle,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Extraction {
    LastState,
    Printed,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("model").required(true).args(["endpoint", "mock"]))]
struct EvalArgs {
    #[arg(long)]
    bench: PathBuf,
    /// Endpoint config (`key = value` lines).
    #[arg(long)]
    endpoint: Option<PathBuf>,
    /// Serve a built-in model on a local port instead of a real endpoint.
    #[arg(long, value_enum)]
    mock: Option<MockKind>,
    #[arg(long)]
    mode: Option<EvalMode>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Prompt template; the natural one per item when omitted.
    #[arg(long)]
    kind: Option<PromptKind>,
    #[arg(long, value_enum, default_value = "last-state")]
    extraction: Extraction,
    #[arg(long)]
    max_tokens: Option<usize>,
    /// Re-run failing items on decomposed programs.
    #[arg(long)]
    intervene: bool,
}

#[derive(Debug, Args)]
struct ReportArgs {
    records: PathBuf,
    #[arg(long, default_value = "text")]
    format: ReportFormat,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn init_logging() {
    let filter = tracing_subscriber::EnvFilter::try_from_env("TRACEBENCH_LOG")
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn"));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

/// Runs one invocation; `argv[0]` is the program name. Returns the exit
/// code: 0 on success, 1 when evaluation failures are present, 2 on usage,
/// config or input errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging();
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Trace(a) => commands::trace(a),
        Command::Transform(a) => commands::transform(a),
        Command::Tokscan(a) => commands::tokscan(a),
        Command::Eval(a) => commands::eval(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(Status::Ok) => 0,
        Ok(Status::Failures(n)) => {
            eprintln!("{n} failure(s)");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
