//! Does a pattern keep its tokens when embedded in a context?

use serde::{Deserialize, Serialize};

use super::{TokenId, TokenizerModel};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscontinuityFinding {
    pub pattern: String,
    pub context: String,
    pub pattern_tokens: Vec<TokenId>,
    pub context_tokens: Vec<TokenId>,
    pub contiguous_match: bool,
    pub explanation: String,
}

impl DiscontinuityFinding {
    /// The pattern occurs in the text but not at the token level.
    pub fn is_discontinuity(&self) -> bool {
        !self.contiguous_match && self.context.contains(&self.pattern)
    }
}

fn find_window(hay: &[TokenId], needle: &[TokenId]) -> Option<usize> {
    if needle.is_empty() {
        return Some(0);
    }
    hay.windows(needle.len()).position(|w| w == needle)
}

pub fn is_token_subsequence(tok: &TokenizerModel, pattern: &str, context: &str) -> DiscontinuityFinding {
    let pattern_tokens = tok.encode(pattern);
    let context_tokens = tok.encode(context);
    let at = find_window(&context_tokens, &pattern_tokens);
    let explanation = match (at, pattern_tokens.first()) {
        (Some(i), _) => format!("pattern tokens found at context position {i}"),
        (None, Some(first)) if !context_tokens.contains(first) => {
            format!("first pattern token {first} never appears in the context")
        }
        (None, Some(first)) => format!("first pattern token {first} appears, but not followed by the rest"),
        (None, None) => unreachable!("empty patterns always match"),
    };
    DiscontinuityFinding {
        pattern: pattern.to_string(),
        context: context.to_string(),
        contiguous_match: at.is_some(),
        pattern_tokens,
        context_tokens,
        explanation,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub pairs: usize,
    /// Pairs whose pattern tokens don't occur contiguously.
    pub no_token_match: usize,
    /// Of those, pairs where the pattern is a substring of the context.
    pub discontinuities: usize,
}

pub fn scan_discontinuities<P: AsRef<str>, C: AsRef<str>>(
    tok: &TokenizerModel,
    pairs: &[(P, C)],
) -> (Vec<DiscontinuityFinding>, ScanSummary) {
    let findings: Vec<DiscontinuityFinding> = pairs
        .iter()
        .map(|(p, c)| is_token_subsequence(tok, p.as_ref(), c.as_ref()))
        .collect();
    let summary = ScanSummary {
        pairs: findings.len(),
        no_token_match: findings.iter().filter(|f| !f.contiguous_match).count(),
        discontinuities: findings.iter().filter(|f| f.is_discontinuity()).count(),
    };
    (findings, summary)
}
