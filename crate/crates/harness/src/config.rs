//! Endpoint config files: one `key = value` per line, `#` comments.

use std::path::Path;
use std::time::Duration;

use crate::endpoint::ModelEndpoint;
use crate::eval::EvalMode;
use crate::HarnessError;

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub endpoint: ModelEndpoint,
    pub jobs: Option<usize>,
    pub mode: Option<EvalMode>,
}

fn unquote(v: &str) -> &str {
    let v = v.trim();
    for q in ['"', '\''] {
        if v.len() >= 2 && v.starts_with(q) && v.ends_with(q) {
            return &v[1..v.len() - 1];
        }
    }
    v
}

impl EvalConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut base_url = None;
        let mut model_name = None;
        let mut ep = ModelEndpoint::new("", "", 8192);
        let mut jobs = None;
        let mut mode = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| HarnessError::Config { line, message };
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') || (l.starts_with('[') && l.ends_with(']')) {
                continue;
            }
            let (k, v) = l
                .split_once('=')
                .or_else(|| l.split_once(':'))
                .ok_or_else(|| err(format!("expected `key = value`, got `{l}`")))?;
            let (k, v) = (k.trim(), unquote(v));
            let num = |what: &str| err(format!("bad {what} `{v}`"));
            match k {
                "base_url" | "url" => base_url = Some(v.to_string()),
                "model" | "model_name" => model_name = Some(v.to_string()),
                "max_tokens" => ep.max_tokens = v.parse().map_err(|_| num("max_tokens"))?,
                "temperature" => ep.temperature = v.parse().map_err(|_| num("temperature"))?,
                "timeout" => ep.timeout = Duration::from_secs_f64(v.parse().map_err(|_| num("timeout"))?),
                "jobs" => jobs = Some(v.parse().map_err(|_| num("jobs"))?),
                "mode" => mode = Some(v.parse().map_err(err)?),
                "auth_token" | "token" => {
                    return Err(err(format!("tokens are read from ${} only", crate::endpoint::TOKEN_ENV)))
                }
                _ => return Err(err(format!("unknown key `{k}`"))),
            }
        }
        let missing = |k: &str| HarnessError::Config { line: 0, message: format!("missing `{k}`") };
        ep.base_url = base_url.ok_or_else(|| missing("base_url"))?;
        ep.model_name = model_name.ok_or_else(|| missing("model"))?;
        ep.validate()?;
        Ok(EvalConfig { endpoint: ep.with_env_token(), jobs, mode })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.into(), source })?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys() {
        let c = EvalConfig::parse(
            "# local server\n[endpoint]\nbase_url = \"http://127.0.0.1:8000\"\nmodel = cwm\nmax_tokens = 4096\n\
             temperature = 0\ntimeout = 30\njobs = 4\nmode = teacher-forcing\n",
        )
        .unwrap();
        assert_eq!(c.endpoint.base_url, "http://127.0.0.1:8000");
        assert_eq!(c.endpoint.model_name, "cwm");
        assert_eq!(c.endpoint.max_tokens, 4096);
        assert_eq!(c.endpoint.timeout, Duration::from_secs(30));
        assert_eq!(c.jobs, Some(4));
        assert_eq!(c.mode, Some(EvalMode::TeacherForcing));
    }

    #[test]
    fn errors_name_the_line() {
        match EvalConfig::parse("base_url = http://x\nmodel = m\nmax_tokens = lots\n") {
            Err(HarnessError::Config { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(EvalConfig::parse("model = m\n"), Err(HarnessError::Config { .. })));
        assert!(matches!(EvalConfig::parse("base_url = x\nmodel = m\ntoken = abc\n"), Err(HarnessError::Config { line: 3, .. })));
    }
}
