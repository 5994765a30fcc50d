//! Deterministic benchmark generators: Composition Zoo, string compositions
//! and Code S5.

mod catalog;
mod s5;
mod zoo;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minipy::{literal_eval, SourceProgram};
use crate::tracer::{evaluate, Outcome};
use crate::value::Value;

pub use catalog::{find_function, select_string_pool, zoo_catalog, AuxArg, Category, ZooFunction};
pub use s5::{compose_permutations, gen_s5_program, prefix_states, render_assignment, trace_states, Permutation, S5Spec, VAR_NAMES};
pub use zoo::{sample_zoo_input, gen_zoo_item, gen_zoo_item_with_pool, table1_fixture, zoo_item_from_chain, ChainLink, ZOO_EVAL_CEILING};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("not a permutation: {0:?}")]
    NotAPermutation(Vec<usize>),
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("no valid composition after {attempts} attempts")]
    Exhausted { attempts: usize },
    #[error("oracle failed: {0}")]
    Oracle(String),
    #[error("malformed item: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Zoo,
    StringComp,
    S5,
    /// Imported function + call pairs (CruxEval or HumanEval style).
    External,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Zoo => "zoo",
            Family::StringComp => "string_comp",
            Family::S5 => "s5",
            Family::External => "external",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zoo" => Ok(Family::Zoo),
            "string_comp" | "string" => Ok(Family::StringComp),
            "s5" => Ok(Family::S5),
            "external" => Ok(Family::External),
            _ => Err(BenchError::UnknownFamily(s.to_string())),
        }
    }
}

/// One generated program with its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ItemRecord", try_from = "ItemRecord")]
pub struct BenchmarkItem {
    pub family: Family,
    pub category: String,
    /// Composition depth, or operation count for s5.
    pub depth: usize,
    pub seed: u64,
    pub program: SourceProgram,
    pub entry_call: String,
    pub expected_output: Value,
    pub expected_rendering: String,
}

/// The JSONL line layout.
#[derive(Serialize, Deserialize)]
struct ItemRecord {
    family: Family,
    category: String,
    depth: usize,
    seed: u64,
    program: String,
    entry_call: String,
    expected_rendering: String,
}

impl From<BenchmarkItem> for ItemRecord {
    fn from(it: BenchmarkItem) -> Self {
        ItemRecord {
            family: it.family,
            category: it.category,
            depth: it.depth,
            seed: it.seed,
            program: it.program.source_text,
            entry_call: it.entry_call,
            expected_rendering: it.expected_rendering,
        }
    }
}

impl TryFrom<ItemRecord> for BenchmarkItem {
    type Error = BenchError;

    fn try_from(r: ItemRecord) -> Result<Self, Self::Error> {
        let expected_output =
            literal_eval(&r.expected_rendering).map_err(|e| BenchError::Malformed(e.to_string()))?;
        Ok(BenchmarkItem {
            family: r.family,
            category: r.category,
            depth: r.depth,
            seed: r.seed,
            program: SourceProgram::new(r.program),
            entry_call: r.entry_call,
            expected_output,
            expected_rendering: r.expected_rendering,
        })
    }
}

impl BenchmarkItem {
    /// For s5 items: the variable printed by the program.
    pub fn s5_spec(&self) -> Option<S5Spec> {
        (self.family == Family::S5)
            .then(|| S5Spec::from_program(&self.program.source_text).ok())
            .flatten()
    }

    /// Wraps a user-supplied program and call, e.g. `f(1,3)`, computing the
    /// expected output with the interpreter.
    pub fn external(
        category: impl Into<String>,
        program: SourceProgram,
        entry_call: impl Into<String>,
        seed: u64,
    ) -> Result<Self, BenchError> {
        let entry_call = entry_call.into();
        let expected = match evaluate(&program, &entry_call, ZOO_EVAL_CEILING) {
            Ok(Outcome::Returned(v)) => v,
            Ok(other) => return Err(BenchError::Oracle(other.to_string())),
            Err(e) => return Err(BenchError::Oracle(e.to_string())),
        };
        Ok(BenchmarkItem {
            family: Family::External,
            category: category.into(),
            depth: 1,
            seed,
            program,
            entry_call,
            expected_rendering: expected.repr(),
            expected_output: expected,
        })
    }

    /// Stable id, e.g. `zoo/math/d3/s17`.
    pub fn id(&self) -> String {
        format!("{}/{}/d{}/s{}", self.family, self.category, self.depth, self.seed)
    }
}

pub fn to_jsonl(items: &[BenchmarkItem]) -> String {
    let mut out = String::new();
    for it in items {
        out.push_str(&serde_json::to_string(it).expect("items serialize"));
        out.push('\n');
    }
    out
}

pub fn from_jsonl(text: &str) -> Result<Vec<BenchmarkItem>, BenchError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| BenchError::Malformed(format!("line {}: {e}", i + 1))))
        .collect()
}

/// RNG for one item. FNV-1a over the identifying tuple, so streams don't
/// depend on generation order.
pub fn item_rng(family: Family, category: &str, depth: usize, seed: u64) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let key = format!("{family}\0{category}\0{depth}\0{seed}");
    for b in key.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_roundtrip() {
        let items = vec![
            gen_zoo_item(Category::Dictionary, 3, 5).unwrap(),
            gen_zoo_item(Category::String, 2, 9).unwrap(),
            gen_s5_program(5, 8, 1, (1, 9)).unwrap(),
        ];
        let text = to_jsonl(&items);
        assert_eq!(text.lines().count(), 3);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        let keys: Vec<&str> = first.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(
            keys,
            ["family", "category", "depth", "seed", "program", "entry_call", "expected_rendering"]
        );
        assert_eq!(from_jsonl(&text).unwrap(), items);
    }

    #[test]
    fn family_names() {
        for f in [Family::Zoo, Family::StringComp, Family::S5] {
            assert_eq!(f.as_str().parse::<Family>().unwrap(), f);
        }
        assert!("cruxeval".parse::<Family>().is_err());
    }

    #[test]
    fn rng_streams_differ() {
        use rand::Rng;
        let mut a = item_rng(Family::Zoo, "math", 1, 0);
        let mut b = item_rng(Family::Zoo, "math", 1, 1);
        assert_ne!(a.random::<u64>(), b.random::<u64>());
    }
}
