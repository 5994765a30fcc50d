//! Byte-level BPE tokenizer and the token-discontinuity scanner.

mod default;
mod files;
mod pretok;
mod scan;
mod train;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tracer::serialize::SPECIAL_TOKENS;
use crate::tracer::TokenCounter;

pub use default::{default_tokenizer, DEFAULT_MERGES};
pub use files::{byte_to_unicode, unicode_to_bytes};
pub use pretok::Pretokenizer;
pub use scan::{is_token_subsequence, scan_discontinuities, DiscontinuityFinding, ScanSummary};
pub use train::{train_bpe, train_bpe_with};

pub type TokenId = u32;

#[derive(Debug, Error)]
pub enum TokError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("unknown token id {0}")]
    UnknownTokenId(TokenId),
    #[error("vocabulary: {0}")]
    Vocab(String),
    #[error("merges line {line}: {message}")]
    Merges { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizerModel {
    /// id -> bytes; `None` for unused ids.
    vocab: Vec<Option<Vec<u8>>>,
    byte_ids: [TokenId; 256],
    /// Merge rules in rank order.
    merges: Vec<(TokenId, TokenId)>,
    /// (left, right) -> (rank, merged id)
    merge_index: HashMap<(TokenId, TokenId), (usize, TokenId)>,
    /// Longest first, for leftmost-longest matching.
    specials: Vec<(String, TokenId)>,
    pretokenizer: Pretokenizer,
}

impl TokenizerModel {
    /// Plain byte tokenizer with the trace specials registered.
    pub fn bytes_only() -> Self {
        let mut byte_ids = [0; 256];
        for (i, b) in byte_ids.iter_mut().enumerate() {
            *b = i as TokenId;
        }
        let mut m = TokenizerModel {
            vocab: (0..=255u8).map(|b| Some(vec![b])).collect(),
            byte_ids,
            merges: Vec::new(),
            merge_index: HashMap::new(),
            specials: Vec::new(),
            pretokenizer: Pretokenizer::Gpt2,
        };
        m.register_trace_specials();
        m
    }

    /// Appends a merge of two existing tokens; returns the new id.
    pub(crate) fn push_merge(&mut self, left: TokenId, right: TokenId) -> TokenId {
        let mut bytes = self.token_bytes(left).expect("known id").to_vec();
        bytes.extend_from_slice(self.token_bytes(right).expect("known id"));
        let id = self.vocab.len() as TokenId;
        self.vocab.push(Some(bytes));
        self.merge_index.insert((left, right), (self.merges.len(), id));
        self.merges.push((left, right));
        id
    }

    pub(crate) fn register_special(&mut self, text: &str, id: Option<TokenId>) -> TokenId {
        if let Some(&(_, id)) = self.specials.iter().find(|(s, _)| s == text) {
            return id;
        }
        let id = id.unwrap_or(self.vocab.len() as TokenId);
        if id as usize >= self.vocab.len() {
            self.vocab.resize(id as usize + 1, None);
        }
        self.vocab[id as usize] = Some(text.as_bytes().to_vec());
        self.specials.push((text.to_string(), id));
        self.specials.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));
        id
    }

    pub(crate) fn register_trace_specials(&mut self) {
        for s in SPECIAL_TOKENS {
            self.register_special(s, None);
        }
    }

    pub fn with_pretokenizer(mut self, p: Pretokenizer) -> Self {
        self.pretokenizer = p;
        self
    }

    pub fn pretokenizer(&self) -> Pretokenizer {
        self.pretokenizer
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.iter().filter(|v| v.is_some()).count()
    }

    pub fn merges(&self) -> &[(TokenId, TokenId)] {
        &self.merges
    }

    pub fn specials(&self) -> impl Iterator<Item = (&str, TokenId)> {
        self.specials.iter().map(|(s, id)| (s.as_str(), *id))
    }

    pub fn special_id(&self, text: &str) -> Option<TokenId> {
        self.specials.iter().find(|(s, _)| s == text).map(|(_, id)| *id)
    }

    pub fn token_bytes(&self, id: TokenId) -> Option<&[u8]> {
        self.vocab.get(id as usize)?.as_deref()
    }

    pub fn id_of(&self, bytes: &[u8]) -> Option<TokenId> {
        // linear, only used by loaders and tests
        self.vocab
            .iter()
            .position(|v| v.as_deref() == Some(bytes))
            .map(|i| i as TokenId)
    }

    pub fn encode(&self, text: &str) -> Vec<TokenId> {
        self.encode_bytes(text.as_bytes())
    }

    /// Specials are matched first and never merge; the gaps are pre-split and
    /// merged chunk by chunk.
    pub fn encode_bytes(&self, data: &[u8]) -> Vec<TokenId> {
        let mut out = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < data.len() {
            let hit = self
                .specials
                .iter()
                .find(|(s, _)| data[i..].starts_with(s.as_bytes()));
            match hit {
                Some((s, id)) => {
                    self.encode_plain(&data[start..i], &mut out);
                    out.push(*id);
                    i += s.len();
                    start = i;
                }
                None => i += 1,
            }
        }
        self.encode_plain(&data[start..], &mut out);
        out
    }

    fn encode_plain(&self, data: &[u8], out: &mut Vec<TokenId>) {
        if data.is_empty() {
            return;
        }
        match std::str::from_utf8(data) {
            Ok(text) => {
                for (a, b) in self.pretokenizer.split(text) {
                    self.merge_chunk(&data[a..b], out);
                }
            }
            // not text: no pre-split
            Err(_) => self.merge_chunk(data, out),
        }
    }

    /// Lowest-rank pair first, leftmost among equal ranks.
    fn merge_chunk(&self, chunk: &[u8], out: &mut Vec<TokenId>) {
        let n = chunk.len();
        let mut ids: Vec<TokenId> = chunk.iter().map(|&b| self.byte_ids[b as usize]).collect();
        if self.merges.is_empty() || n < 2 {
            out.extend(ids);
            return;
        }
        let mut next: Vec<usize> = (1..=n).collect();
        let mut prev: Vec<usize> = (0..n).map(|i| i.wrapping_sub(1)).collect();
        let mut alive = vec![true; n];
        let mut heap = BinaryHeap::new();
        let push = |heap: &mut BinaryHeap<Reverse<(usize, usize, TokenId, TokenId)>>, ids: &[TokenId], i: usize, j: usize| {
            if let Some(&(rank, _)) = self.merge_index.get(&(ids[i], ids[j])) {
                heap.push(Reverse((rank, i, ids[i], ids[j])));
            }
        };
        for i in 0..n - 1 {
            push(&mut heap, &ids, i, i + 1);
        }
        while let Some(Reverse((_, i, l, r))) = heap.pop() {
            let j = next[i];
            if !alive[i] || j >= n || ids[i] != l || ids[j] != r {
                continue;
            }
            ids[i] = self.merge_index[&(l, r)].1;
            alive[j] = false;
            next[i] = next[j];
            if next[j] < n {
                prev[next[j]] = i;
            }
            if prev[i] < n {
                push(&mut heap, &ids, prev[i], i);
            }
            if next[i] < n {
                push(&mut heap, &ids, i, next[i]);
            }
        }
        let mut i = 0;
        while i < n {
            out.push(ids[i]);
            i = next[i];
        }
    }

    pub fn decode_bytes(&self, ids: &[TokenId]) -> Result<Vec<u8>, TokError> {
        let mut out = Vec::new();
        for &id in ids {
            out.extend_from_slice(self.token_bytes(id).ok_or(TokError::UnknownTokenId(id))?);
        }
        Ok(out)
    }

    /// Invalid UTF-8 is replaced, as the ids may split a character.
    pub fn decode(&self, ids: &[TokenId]) -> Result<String, TokError> {
        Ok(String::from_utf8_lossy(&self.decode_bytes(ids)?).into_owned())
    }

    /// Human-readable form of each token, for reports.
    pub fn token_strings(&self, ids: &[TokenId]) -> Vec<String> {
        ids.iter()
            .map(|&id| match self.token_bytes(id) {
                Some(b) => String::from_utf8_lossy(b).into_owned(),
                None => format!("<unk:{id}>"),
            })
            .collect()
    }
}

impl TokenCounter for TokenizerModel {
    fn count_tokens(&self, text: &str) -> usize {
        self.encode(text).len()
    }
}

/// Serializable summary, for CLI output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub vocab_size: usize,
    pub merges: usize,
    pub specials: usize,
    pub pretokenizer: Pretokenizer,
}

impl TokenizerModel {
    pub fn info(&self) -> ModelInfo {
        ModelInfo {
            vocab_size: self.vocab_size(),
            merges: self.merges.len(),
            specials: self.specials.len(),
            pretokenizer: self.pretokenizer,
        }
    }
}

#[cfg(test)]
mod tests;
