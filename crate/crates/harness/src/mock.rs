//! In-process models for testing the pipeline, and a tiny HTTP server that
//! exposes any model over the completion protocol.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use tracebench_core::benchgen::{prefix_states, trace_states, Permutation, S5Spec, VAR_NAMES};
use tracebench_core::minipy::SourceProgram;
use tracebench_core::toklab::{default_tokenizer, TokenizerModel};
use tracebench_core::tracer::serialize::{render_state, snapshot_diff, FRAME_SEP};
use tracebench_core::tracer::{execute_traced, serialize_trace};
use tracing::debug;

use crate::endpoint::{Completion, CompletionModel, CompletionRequest, FinishReason};
use crate::prompt::{asserted_call, Prompt, BEGIN_OF_TEXT, TRACE_CONTEXT_START};
use crate::prompt_text::{S5_USER_HEAD, S5_USER_TAIL, VERIFY};
use crate::s5trace::{is_op_line, read_s5_trace};
use crate::HarnessError;

const MOCK_CEILING: usize = 1_000_000;

/// Applies stop sequences (excluded from the text) and the token budget.
fn finish(text: &str, stop: &[String], max_tokens: usize, tok: &TokenizerModel) -> Completion {
    let mut text = text;
    if let Some(at) = stop.iter().filter(|s| !s.is_empty()).filter_map(|s| text.find(s.as_str())).min() {
        text = &text[..at];
    }
    let ids = tok.encode(text);
    if ids.len() > max_tokens {
        let cut = tok.decode(&ids[..max_tokens]).unwrap_or_default();
        return Completion { text: cut, finish_reason: FinishReason::Length };
    }
    Completion { text: text.to_string(), finish_reason: FinishReason::Stop }
}

/// Returns the same text for every prompt.
#[derive(Debug, Clone)]
pub struct CannedModel {
    pub text: String,
    pub finish_reason: FinishReason,
}

impl CannedModel {
    pub fn new(text: impl Into<String>) -> Self {
        CannedModel { text: text.into(), finish_reason: FinishReason::Stop }
    }

    /// A completion that always reports a length cutoff.
    pub fn cut_off(text: impl Into<String>) -> Self {
        CannedModel { text: text.into(), finish_reason: FinishReason::Length }
    }
}

impl CompletionModel for CannedModel {
    fn complete(&self, _prompt: &Prompt, _stop: &[String], _max_tokens: usize) -> Result<Completion, HarnessError> {
        Ok(Completion { text: self.text.clone(), finish_reason: self.finish_reason })
    }
}

/// A model that answers by running the interpreter: it recovers the
/// program from the prompt and continues the true trace from wherever the
/// prompt stops. Scores 100% whenever its budget suffices.
pub struct OracleModel {
    tok: &'static TokenizerModel,
}

impl Default for OracleModel {
    fn default() -> Self {
        OracleModel { tok: default_tokenizer() }
    }
}

impl OracleModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// The unbounded completion for `prompt`.
    pub fn ideal(&self, prompt: &Prompt) -> Result<String, HarnessError> {
        let text = &prompt.text;
        if let Some((program, prefix)) = split_trace_prompt(text) {
            let doc = execute_traced(&SourceProgram::new(program), "main()", MOCK_CEILING)?;
            let trace = serialize_trace(&doc);
            return Ok(trace.strip_prefix(prefix).unwrap_or("").to_string());
        }
        if let Some(program) = chat_program(text) {
            // a trailing line event exposes the state after the last op
            let padded = program.replacen("\n\ndef main():", "\n    pass\n\ndef main():", 1);
            let doc = execute_traced(&SourceProgram::new(padded), "main()", MOCK_CEILING)?;
            let n = program
                .lines()
                .find_map(|l| l.trim().split_once(" = ").map(|(lhs, _)| lhs).filter(|lhs| lhs.contains(',')))
                .map_or(5, |lhs| lhs.split(',').count());
            let last = trace_states(&doc.events, n).pop().unwrap_or_default();
            return Ok(tracebench_core::benchgen::render_assignment(&last));
        }
        if let Some(at) = text.rfind(VERIFY) {
            let program = text[at + VERIFY.len()..].trim_start_matches('\n');
            let call = asserted_call(text).unwrap_or("main()");
            let doc = execute_traced(&SourceProgram::new(format!("{program}\n")), "main()", MOCK_CEILING)?;
            let mut out = format!("{TRACE_CONTEXT_START}{}", serialize_trace(&doc));
            if let Some(v) = &doc.final_return {
                out.push_str(&format!("\n\n[ANSWER]\nassert {call} == {}\n[/ANSWER]", v.repr()));
            }
            return Ok(out);
        }
        Err(HarnessError::MalformedResponse("oracle cannot read this prompt".into()))
    }
}

impl CompletionModel for OracleModel {
    fn complete(&self, prompt: &Prompt, stop: &[String], max_tokens: usize) -> Result<Completion, HarnessError> {
        let text = self.ideal(prompt)?;
        Ok(finish(&text, stop, max_tokens, self.tok))
    }
}

/// `(program, trace prefix)` of a prompt that opens a trace context. The prefix starts
/// at the first `<|frame_sep|>` after the program.
fn split_trace_prompt(text: &str) -> Option<(&str, &str)> {
    let rest = text.strip_prefix(BEGIN_OF_TEXT).unwrap_or(text).strip_prefix(TRACE_CONTEXT_START)?;
    let body = rest.strip_prefix('\n').unwrap_or(rest);
    let at = body.find(FRAME_SEP)?;
    Some((&body[..at], &body[at..]))
}

fn chat_program(text: &str) -> Option<&str> {
    let start = text.find(S5_USER_HEAD)? + S5_USER_HEAD.len();
    let end = text.rfind(S5_USER_TAIL)?;
    (start <= end).then(|| text[start..end].trim_matches('\n'))
}

/// An s5 model that gets exactly one action wrong: op `step` (1-based) is
/// replaced by a nearby permutation that changes the state.
///
/// Given a bare trace prompt it writes the whole trace of the corrupted
/// program, so every later state is off too. Given a teacher-forced prefix
/// it predicts the next state from the last true state and the last true
/// action, misapplying only op `step`.
pub struct CorruptingS5Model {
    pub step: usize,
    oracle: OracleModel,
}

impl CorruptingS5Model {
    pub fn new(step: usize) -> Self {
        CorruptingS5Model { step, oracle: OracleModel::new() }
    }

    fn corrupted_op(&self, spec: &S5Spec) -> Option<Permutation> {
        let k = self.step.checked_sub(1)?;
        let op = spec.ops.get(k)?;
        let before = prefix_states(&spec.ops, &spec.init).ok()?.get(k)?.clone();
        let want = op.apply(&before).ok()?;
        let n = op.len();
        for i in 0..n {
            for j in i + 1..n {
                let mut img = op.image().to_vec();
                img.swap(i, j);
                let p = Permutation::new(img).ok()?;
                if p.apply(&before).ok()? != want {
                    return Some(p);
                }
            }
        }
        None
    }

    fn ideal(&self, prompt: &Prompt) -> Result<String, HarnessError> {
        let Some((program, prefix)) = split_trace_prompt(&prompt.text) else {
            return self.oracle.ideal(prompt);
        };
        let spec = S5Spec::from_program(program).map_err(|e| HarnessError::MalformedResponse(e.to_string()))?;
        let Some(bad) = self.corrupted_op(&spec) else {
            return self.oracle.ideal(prompt);
        };
        let n = spec.n_vars();
        if prefix == FRAME_SEP {
            let mut wrong = spec.clone();
            wrong.ops[self.step - 1] = bad;
            let doc = execute_traced(&SourceProgram::new(wrong.program_text()), "main()", MOCK_CEILING)?;
            return Ok(serialize_trace(&doc)[FRAME_SEP.len()..].to_string());
        }
        // teacher forced: predict the state after the last action shown
        let reading = read_s5_trace(prefix).map_err(|e| HarnessError::MalformedResponse(e.to_string()))?;
        let Some(last) = reading.lines.last() else {
            return self.oracle.ideal(prompt);
        };
        let ops_seen = reading.op_actions(n).len();
        if !is_op_line(&last.action, n) {
            return self.oracle.ideal(prompt);
        }
        let vars = &VAR_NAMES[..n];
        let perm = if ops_seen == self.step {
            bad
        } else {
            let rhs: Vec<&str> = last.action.split_once(" = ").map(|(_, r)| r).unwrap_or("").split(',').map(str::trim).collect();
            Permutation::from_names(vars, &rhs).map_err(|e| HarnessError::MalformedResponse(e.to_string()))?
        };
        let before: Vec<String> = vars
            .iter()
            .map(|v| last.state.iter().find(|(k, _)| k == v).map(|(_, x)| x.clone()).unwrap_or_default())
            .collect();
        let after = perm.apply(&before).map_err(|e| HarnessError::MalformedResponse(e.to_string()))?;
        let next: Vec<(String, String)> = vars.iter().map(|v| v.to_string()).zip(after).collect();
        Ok(render_state(&snapshot_diff(Some(&last.state), &next)))
    }
}

impl CompletionModel for CorruptingS5Model {
    fn complete(&self, prompt: &Prompt, stop: &[String], max_tokens: usize) -> Result<Completion, HarnessError> {
        let text = self.ideal(prompt)?;
        Ok(finish(&text, stop, max_tokens, self.oracle.tok))
    }
}

/// Serves a model on `127.0.0.1` over the JSON completion protocol. One
/// request per connection. Stops when dropped.
pub struct MockServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    requests: Arc<AtomicUsize>,
    handle: Option<JoinHandle<()>>,
}

#[derive(Clone, Default)]
pub struct MockOptions {
    /// Demand `Authorization: Bearer <token>`.
    pub require_token: Option<String>,
    /// Answer this many requests with HTTP 503 first.
    pub fail_first: usize,
}

impl MockServer {
    pub fn start(model: Arc<dyn CompletionModel>) -> std::io::Result<Self> {
        Self::start_with(model, MockOptions::default())
    }

    pub fn start_with(model: Arc<dyn CompletionModel>, opts: MockOptions) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let requests = Arc::new(AtomicUsize::new(0));
        let (stop2, requests2) = (stop.clone(), requests.clone());
        let handle = std::thread::spawn(move || {
            for conn in listener.incoming() {
                if stop2.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(conn) = conn else { continue };
                let n = requests2.fetch_add(1, Ordering::SeqCst);
                let (model, opts) = (model.clone(), opts.clone());
                std::thread::spawn(move || {
                    if let Err(e) = serve(conn, &*model, &opts, n) {
                        debug!(error = %e, "mock connection failed");
                    }
                });
            }
        });
        Ok(MockServer { addr, stop, requests, handle: Some(handle) })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Requests received so far, including rejected ones.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the accept loop
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn respond(conn: &mut TcpStream, status: &str, body: &str) -> std::io::Result<()> {
    write!(
        conn,
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    conn.flush()
}

fn serve(mut conn: TcpStream, model: &dyn CompletionModel, opts: &MockOptions, n: usize) -> std::io::Result<()> {
    let mut reader = BufReader::new(conn.try_clone()?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let mut length = 0usize;
    let mut auth = None;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 || line == "\r\n" {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            match k.trim().to_ascii_lowercase().as_str() {
                "content-length" => length = v.trim().parse().unwrap_or(0),
                "authorization" => auth = Some(v.trim().to_string()),
                _ => {}
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body)?;

    if n < opts.fail_first {
        return respond(&mut conn, "503 Service Unavailable", r#"{"error": "busy"}"#);
    }
    if let Some(tok) = &opts.require_token {
        if auth.as_deref() != Some(&format!("Bearer {tok}")) {
            return respond(&mut conn, "401 Unauthorized", r#"{"error": "bad token"}"#);
        }
    }
    let req: CompletionRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return respond(&mut conn, "400 Bad Request", &serde_json::json!({ "error": e.to_string() }).to_string()),
    };
    let prompt = Prompt { system: req.system, text: req.prompt };
    match model.complete(&prompt, &req.stop, req.max_tokens) {
        Ok(c) => respond(&mut conn, "200 OK", &serde_json::to_string(&c).expect("completion serializes")),
        Err(e) => respond(&mut conn, "500 Internal Server Error", &serde_json::json!({ "error": e.to_string() }).to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stop_and_budget() {
        let tok = default_tokenizer();
        let c = finish("abc<|action_sep|>def", &["<|action_sep|>".into()], 100, tok);
        assert_eq!(c, Completion { text: "abc".into(), finish_reason: FinishReason::Stop });
        let long = "word ".repeat(50);
        let c = finish(&long, &[], 5, tok);
        assert_eq!(c.finish_reason, FinishReason::Length);
        assert!(long.starts_with(&c.text) && c.text.len() < long.len());
    }

    #[test]
    fn trace_prompt_split() {
        let p = "<|begin_of_text|><|trace_context_start|>\ndef main():\n    pass\n<|frame_sep|><|call_sep|>";
        assert_eq!(split_trace_prompt(p), Some(("def main():\n    pass\n", "<|frame_sep|><|call_sep|>")));
        assert_eq!(split_trace_prompt("plain"), None);
    }
}
