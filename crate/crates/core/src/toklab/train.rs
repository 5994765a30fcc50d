//! Greedy BPE training with incremental pair counts.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, HashSet};

use super::{Pretokenizer, TokError, TokenId, TokenizerModel};
use crate::tracer::serialize::SPECIAL_TOKENS;

/// Trains `n_merges` merges over GPT-2 style chunks of `corpus`.
pub fn train_bpe<S: AsRef<str>>(corpus: &[S], n_merges: usize) -> Result<TokenizerModel, TokError> {
    train_bpe_with(corpus, n_merges, Pretokenizer::Gpt2)
}

/// Heap entry: highest count first, then the lexicographically smallest
/// `(left bytes, right bytes)`.
#[derive(PartialEq, Eq)]
struct Candidate {
    count: u64,
    key: Reverse<(Vec<u8>, Vec<u8>)>,
    pair: (TokenId, TokenId),
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count.cmp(&other.count).then_with(|| self.key.cmp(&other.key))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Word {
    syms: Vec<TokenId>,
    count: u64,
}

pub fn train_bpe_with<S: AsRef<str>>(
    corpus: &[S],
    n_merges: usize,
    pretokenizer: Pretokenizer,
) -> Result<TokenizerModel, TokError> {
    if corpus.iter().all(|t| t.as_ref().is_empty()) {
        return Err(TokError::EmptyCorpus);
    }
    let mut model = TokenizerModel::bytes_only().with_pretokenizer(pretokenizer);

    let mut chunks: HashMap<&[u8], u64> = HashMap::new();
    for text in corpus {
        for piece in split_specials(text.as_ref()) {
            for (a, b) in pretokenizer.split(piece) {
                *chunks.entry(&piece.as_bytes()[a..b]).or_default() += 1;
            }
        }
    }
    // sorted so training never depends on hash order
    let mut chunk_list: Vec<(&[u8], u64)> = chunks.into_iter().collect();
    chunk_list.sort();
    let mut words: Vec<Word> = chunk_list
        .into_iter()
        .map(|(b, count)| Word { syms: b.iter().map(|&x| TokenId::from(x)).collect(), count })
        .collect();

    let mut counts: HashMap<(TokenId, TokenId), u64> = HashMap::new();
    let mut where_: HashMap<(TokenId, TokenId), HashSet<usize>> = HashMap::new();
    for (wi, w) in words.iter().enumerate() {
        for p in w.syms.windows(2) {
            *counts.entry((p[0], p[1])).or_default() += w.count;
            where_.entry((p[0], p[1])).or_default().insert(wi);
        }
    }
    let candidate = |model: &TokenizerModel, pair: (TokenId, TokenId), count: u64| Candidate {
        count,
        key: Reverse((
            model.token_bytes(pair.0).expect("known").to_vec(),
            model.token_bytes(pair.1).expect("known").to_vec(),
        )),
        pair,
    };
    let mut heap: BinaryHeap<Candidate> = counts.iter().map(|(&p, &c)| candidate(&model, p, c)).collect();

    while model.merges().len() < n_merges {
        let Some(best) = heap.pop() else { break };
        let current = counts.get(&best.pair).copied().unwrap_or(0);
        if current == 0 {
            continue;
        }
        if current != best.count {
            heap.push(candidate(&model, best.pair, current));
            continue;
        }
        let new_id = model.push_merge(best.pair.0, best.pair.1);
        let mut affected: Vec<usize> = where_.remove(&best.pair).unwrap_or_default().into_iter().collect();
        affected.sort_unstable();
        let mut touched: HashSet<(TokenId, TokenId)> = HashSet::new();
        for wi in affected {
            let w = &mut words[wi];
            for p in w.syms.windows(2) {
                let key = (p[0], p[1]);
                if let Some(c) = counts.get_mut(&key) {
                    *c -= w.count;
                }
                touched.insert(key);
            }
            w.syms = merge_word(&w.syms, best.pair, new_id);
            for p in w.syms.windows(2) {
                let key = (p[0], p[1]);
                *counts.entry(key).or_default() += w.count;
                where_.entry(key).or_default().insert(wi);
                touched.insert(key);
            }
        }
        counts.remove(&best.pair);
        for key in touched {
            match counts.get(&key) {
                Some(&c) if c > 0 => heap.push(candidate(&model, key, c)),
                _ => {}
            }
        }
    }
    Ok(model)
}

fn merge_word(syms: &[TokenId], pair: (TokenId, TokenId), new_id: TokenId) -> Vec<TokenId> {
    let mut out = Vec::with_capacity(syms.len());
    let mut i = 0;
    while i < syms.len() {
        if i + 1 < syms.len() && (syms[i], syms[i + 1]) == pair {
            out.push(new_id);
            i += 2;
        } else {
            out.push(syms[i]);
            i += 1;
        }
    }
    out
}

/// The text between trace special tokens.
fn split_specials(text: &str) -> Vec<&str> {
    let mut pieces = vec![text];
    for s in SPECIAL_TOKENS {
        pieces = pieces.into_iter().flat_map(|p| p.split(s)).collect();
    }
    pieces.retain(|p| !p.is_empty());
    pieces
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_merges_is_bytes() {
        let m = train_bpe(&["hello world"], 0).unwrap();
        assert_eq!(m.encode("hello"), b"hello".iter().map(|&b| b as TokenId).collect::<Vec<_>>());
        assert!(m.merges().is_empty());
    }

    #[test]
    fn forced_first_merge() {
        let m = train_bpe(&["aaaa"], 1).unwrap();
        let a = TokenId::from(b'a');
        assert_eq!(m.merges(), &[(a, a)]);
        assert_eq!(m.encode("aaaa").len(), 2);
        assert_eq!(m.encode("aaa").len(), 2);
    }

    #[test]
    fn ties_break_lexicographically() {
        // "ab" and "cd" both occur twice
        let m = train_bpe(&["cd ab cd ab"], 1).unwrap();
        assert_eq!(m.token_bytes(m.merges()[0].0), Some(&b" "[..]));
        let m = train_bpe_with(&["cdab", "abcd"], 1, Pretokenizer::None).unwrap();
        assert_eq!(m.merges()[0], (TokenId::from(b'a'), TokenId::from(b'b')));
    }

    #[test]
    fn empty_corpus() {
        assert!(matches!(train_bpe::<&str>(&[], 3), Err(TokError::EmptyCorpus)));
        assert!(matches!(train_bpe(&[""], 3), Err(TokError::EmptyCorpus)));
    }

    #[test]
    fn stops_when_no_pairs_left() {
        let m = train_bpe(&["ab"], 10).unwrap();
        assert_eq!(m.merges().len(), 1);
    }

    #[test]
    fn specials_are_not_training_material() {
        let m = train_bpe(&["<|frame_sep|><|frame_sep|>"], 50).unwrap();
        assert!(m.merges().is_empty());
    }

    #[test]
    fn deterministic() {
        let corpus = ["the cat sat on the mat", "the dog sat", "a-.-.b -. -."];
        assert_eq!(train_bpe(&corpus, 20).unwrap(), train_bpe(&corpus, 20).unwrap());
    }
}
