//! File helpers that keep the path in every error.

use std::path::{Path, PathBuf};

use tracebench_core::toklab::{default_tokenizer, TokenizerModel};

use crate::CliError;

pub(crate) fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

/// Writes to `path`, or stdout when there is none.
pub(crate) fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io { path: p.into(), source }),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })
        }
    }
}

pub(crate) fn bad_input(path: &Path, message: impl std::fmt::Display) -> CliError {
    CliError::BadInput { path: path.into(), message: message.to_string() }
}

/// `default` (the built-in model), `bytes` (no merges), a directory holding
/// `vocab.json` and `merges.txt`, or one JSON file
/// `{"vocab": {...}, "merges": ["a b", ...]}`.
pub fn load_tokenizer(spec: &str) -> Result<TokenizerModel, CliError> {
    match spec {
        "default" => return Ok(default_tokenizer().clone()),
        "bytes" => return Ok(TokenizerModel::bytes_only()),
        _ => {}
    }
    let path = Path::new(spec);
    if path.is_dir() {
        let vocab = read_text(&path.join("vocab.json"))?;
        let merges = read_text(&path.join("merges.txt"))?;
        return TokenizerModel::from_vocab_and_merges(&vocab, &merges).map_err(|e| bad_input(path, e));
    }
    let text = read_text(path)?;
    let doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad_input(path, e))?;
    let vocab = doc.get("vocab").ok_or_else(|| bad_input(path, "missing `vocab`"))?;
    let merges = match doc.get("merges") {
        Some(serde_json::Value::String(s)) => s.clone(),
        Some(serde_json::Value::Array(lines)) => lines
            .iter()
            .map(|l| l.as_str().map(|s| format!("{s}\n")).ok_or_else(|| bad_input(path, "merges must be strings")))
            .collect::<Result<String, _>>()?,
        None => String::new(),
        Some(_) => return Err(bad_input(path, "`merges` must be a list of strings")),
    };
    TokenizerModel::from_vocab_and_merges(&vocab.to_string(), &merges).map_err(|e| bad_input(path, e))
}
