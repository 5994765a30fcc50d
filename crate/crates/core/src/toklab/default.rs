//! The tokenizer used when none is supplied: BPE trained on traces of
//! generated benchmark programs.

use std::sync::OnceLock;

use super::{train_bpe, TokenizerModel};
use crate::benchgen::{gen_s5_program, gen_zoo_item, Category};
use crate::tracer::{execute_traced, serialize_trace, DEFAULT_STEP_CEILING};

pub const DEFAULT_MERGES: usize = 1000;

fn builtin_corpus() -> Vec<String> {
    let mut items = Vec::new();
    for c in Category::ALL {
        for depth in 1..=5 {
            for seed in 0..6 {
                items.extend(gen_zoo_item(c, depth, seed).ok());
            }
        }
    }
    for seed in 0..8 {
        items.extend(gen_s5_program(5, 16, seed, (1, 9)).ok());
    }
    let mut corpus = Vec::new();
    for it in items {
        if let Ok(doc) = execute_traced(&it.program, &it.entry_call, DEFAULT_STEP_CEILING) {
            corpus.push(serialize_trace(&doc));
        }
        corpus.push(it.program.source_text);
    }
    corpus
}

/// Shared, trained once per process.
pub fn default_tokenizer() -> &'static TokenizerModel {
    static TOK: OnceLock<TokenizerModel> = OnceLock::new();
    TOK.get_or_init(|| train_bpe(&builtin_corpus(), DEFAULT_MERGES).expect("built-in corpus is not empty"))
}
