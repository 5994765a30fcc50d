//! Semantics-preserving rewrites that surface hidden intermediate values:
//! expression extraction into temporaries and character-level expansion of
//! single-character string operations.

mod hoist;
mod strings;
mod verify;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minipy::{identifiers, Module};

pub use hoist::{decompose_expressions, expand_string_ops, expand_string_ops_with_report};
pub use verify::{
    inflation_under_budget, trace_inflation, verify_equivalence, CaseReport, CaseVerdict, EquivalenceReport,
    InflationReport, VERIFY_STEP_CEILING,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StringOp {
    Index,
    Rindex,
    Find,
    Rfind,
    Count,
    Replace,
    Contains,
}

impl StringOp {
    pub const ALL: [StringOp; 7] = [
        StringOp::Index,
        StringOp::Rindex,
        StringOp::Find,
        StringOp::Rfind,
        StringOp::Count,
        StringOp::Replace,
        StringOp::Contains,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StringOp::Index => "index",
            StringOp::Rindex => "rindex",
            StringOp::Find => "find",
            StringOp::Rfind => "rfind",
            StringOp::Count => "count",
            StringOp::Replace => "replace",
            StringOp::Contains => "contains",
        }
    }
}

impl fmt::Display for StringOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown string operation `{0}`")]
pub struct UnknownStringOp(pub String);

impl FromStr for StringOp {
    type Err = UnknownStringOp;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StringOp::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| UnknownStringOp(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformConfig {
    /// Minimum node count of a nested subexpression before it is extracted.
    pub complexity_threshold: usize,
    pub temp_prefix: String,
    pub string_ops_enabled: BTreeSet<StringOp>,
    /// Variables the caller guarantees hold one-character strings, so
    /// `text.index(char)` qualifies like `text.index('x')`.
    pub assume_single_char: BTreeSet<String>,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig {
            complexity_threshold: 2,
            temp_prefix: "_t".into(),
            string_ops_enabled: StringOp::ALL.into_iter().collect(),
            assume_single_char: BTreeSet::new(),
        }
    }
}

/// One candidate string-operation site and what happened to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StringOpSite {
    pub line: usize,
    pub op: StringOp,
    pub expanded: bool,
    /// Why a qualifying site was left alone.
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub sites: Vec<StringOpSite>,
}

impl ExpansionReport {
    pub fn expanded(&self) -> usize {
        self.sites.iter().filter(|s| s.expanded).count()
    }

    pub fn skipped(&self) -> impl Iterator<Item = &StringOpSite> {
        self.sites.iter().filter(|s| !s.expanded)
    }
}

/// Temporary-name source. Numbering starts past any existing
/// `<prefix><digits>` identifier, so names never collide and repeated
/// passes over the same module keep one prefix.
#[derive(Debug, Clone)]
pub(crate) struct Fresh {
    prefix: String,
    next: usize,
}

impl Fresh {
    pub(crate) fn for_module(module: &Module, prefix: &str) -> Fresh {
        let next = identifiers(module)
            .iter()
            .filter_map(|id| id.strip_prefix(prefix))
            .filter(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
            .filter_map(|rest| rest.parse::<usize>().ok())
            .map(|n| n + 1)
            .max()
            .unwrap_or(0);
        Fresh { prefix: prefix.to_string(), next }
    }

    pub(crate) fn name(&mut self) -> String {
        let n = format!("{}{}", self.prefix, self.next);
        self.next += 1;
        n
    }
}

#[cfg(test)]
mod tests;
