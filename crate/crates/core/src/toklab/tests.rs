use proptest::prelude::*;

use super::*;

/// ".-" outnumbers "-." so it merges first; "-." still becomes a token.
pub(crate) fn toy_model() -> TokenizerModel {
    let mut corpus = vec![".-"; 5];
    corpus.extend(["-."; 3]);
    train_bpe(&corpus, 2).unwrap()
}

fn gpt_style_mini_vocab() -> TokenizerModel {
    let base = TokenizerModel::bytes_only();
    let (vocab, _) = base.to_vocab_and_merges();
    let mut v: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&vocab).unwrap();
    let next = v.len();
    v.insert("\u{120}B".into(), (next).into());
    v.insert("\u{120}Ba".into(), (next + 1).into());
    let merges = "#version: 0.2\n\u{120} B\n\u{120}B a\n";
    TokenizerModel::from_vocab_and_merges(&serde_json::to_string(&v).unwrap(), merges).unwrap()
}

/// Independent check: some token boundary of the context starts a run of
/// tokens whose bytes and inner boundaries equal the pattern's.
fn boundary_match(tok: &TokenizerModel, f: &DiscontinuityFinding) -> bool {
    let offsets = |ids: &[TokenId]| {
        let mut acc = vec![0];
        for &id in ids {
            acc.push(acc.last().unwrap() + tok.token_bytes(id).unwrap().len());
        }
        acc
    };
    let ctx = tok.decode_bytes(&f.context_tokens).unwrap();
    let pat = tok.decode_bytes(&f.pattern_tokens).unwrap();
    let co = offsets(&f.context_tokens);
    let po = offsets(&f.pattern_tokens);
    co.iter().any(|&start| {
        ctx[start..].starts_with(&pat) && po.iter().all(|p| co.contains(&(start + p)))
    })
}

#[test]
fn empty_text() {
    let tok = default_tokenizer();
    assert!(tok.encode("").is_empty());
    assert_eq!(tok.decode(&[]).unwrap(), "");
}

#[test]
fn unknown_id() {
    let tok = TokenizerModel::bytes_only();
    assert!(matches!(tok.decode(&[1_000_000]), Err(TokError::UnknownTokenId(1_000_000))));
}

#[test]
fn specials_are_atomic() {
    let tok = train_bpe(&["ab<|frame_sep|>ab<|line_sep|>"], 10).unwrap();
    let ids = tok.encode("ab<|frame_sep|>ab");
    let sep = tok.special_id("<|frame_sep|>").unwrap();
    assert_eq!(ids.len(), 3);
    assert_eq!(ids[1], sep);
    assert_eq!(tok.decode(&ids).unwrap(), "ab<|frame_sep|>ab");
    assert_eq!(default_tokenizer().count_tokens("<|frame_sep|><|call_sep|>{}"), 3);
}

#[test]
fn separator_hidden_inside_context() {
    let tok = toy_model();
    let sep = tok.encode("-.");
    assert_eq!(sep.len(), 1);
    let ctx = tok.encode("a-.-.b");
    assert!(!ctx.contains(&sep[0]));
    let f = is_token_subsequence(&tok, "-.", "a-.-.b");
    assert!(!f.contiguous_match);
    assert!(f.is_discontinuity());
    assert!(f.explanation.contains("never appears"), "{}", f.explanation);
}

#[test]
fn gpt_style_pattern_loses_its_leading_token() {
    let tok = gpt_style_mini_vocab();
    let p = tok.encode(" B ");
    let c = tok.encode(" BaB ");
    assert_eq!(p.len(), 2);
    assert_eq!(c.len(), 3);
    assert_eq!(p.last(), c.last());
    assert!(!c.contains(&p[0]));
    assert!(!is_token_subsequence(&tok, " B ", " BaB ").contiguous_match);
}

#[test]
fn identical_pairs_never_flag() {
    let tok = toy_model();
    let pairs: Vec<(&str, &str)> = vec![("x", "x"), ("-.", "-."), ("a-.-.b", "a-.-.b")];
    let (findings, summary) = scan_discontinuities(&tok, &pairs);
    assert!(findings.iter().all(|f| f.contiguous_match));
    assert_eq!(summary.discontinuities, 0);
}

#[test]
fn default_tokenizer_compresses_traces() {
    let tok = default_tokenizer();
    let text = "<|frame_sep|><|line_sep|>{\"a\": \"..\", \"b\": \"..\", \"y\": \"1\"}<|action_sep|>    for i in range(b):\n";
    let n = tok.count_tokens(text);
    assert!(n < text.len() / 2, "{n}");
    assert_eq!(tok.decode(&tok.encode(text)).unwrap(), text);
    assert!(tok.merges().len() > 256 && tok.merges().len() <= DEFAULT_MERGES);
    eprintln!("default merges: {}", tok.merges().len());
}

proptest! {
    #[test]
    fn lossless_bytes(data in proptest::collection::vec(any::<u8>(), 0..200)) {
        let tok = default_tokenizer();
        prop_assert_eq!(tok.decode_bytes(&tok.encode_bytes(&data)).unwrap(), data);
    }

    #[test]
    fn lossless_text(s in "\\PC{0,80}") {
        let tok = default_tokenizer();
        prop_assert_eq!(tok.decode(&tok.encode(&s)).unwrap(), s);
    }

    #[test]
    fn zero_merges_is_substring_search(p in "[ab.-]{0,4}", c in "[ab.-]{0,12}") {
        let tok = TokenizerModel::bytes_only();
        prop_assert_eq!(is_token_subsequence(&tok, &p, &c).contiguous_match, c.contains(&p));
    }

    #[test]
    fn finding_agrees_with_boundaries(p in "[ab. -]{1,4}", c in "[ab. -]{0,16}") {
        for tok in [toy_model(), gpt_style_mini_vocab()] {
            let f = is_token_subsequence(&tok, &p, &c);
            prop_assert_eq!(f.contiguous_match, boundary_match(&tok, &f));
        }
    }
}
