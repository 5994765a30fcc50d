//! GPT-2 style `vocab.json` + `merges.txt` files.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::OnceLock;

use super::{Pretokenizer, TokError, TokenId, TokenizerModel};

fn tables() -> &'static ([char; 256], HashMap<char, u8>) {
    static T: OnceLock<([char; 256], HashMap<char, u8>)> = OnceLock::new();
    T.get_or_init(|| {
        let printable = |b: u8| (b'!'..=b'~').contains(&b) || (0xA1..=0xAC).contains(&b) || b >= 0xAE;
        let mut fwd = ['\0'; 256];
        let mut extra = 0u32;
        for b in 0..=255u8 {
            fwd[b as usize] = if printable(b) {
                char::from(b)
            } else {
                extra += 1;
                char::from_u32(255 + extra).expect("valid scalar")
            };
        }
        let back = fwd.iter().enumerate().map(|(b, &c)| (c, b as u8)).collect();
        (fwd, back)
    })
}

/// Printable stand-in for a byte sequence (space becomes `Ġ`).
pub fn byte_to_unicode(bytes: &[u8]) -> String {
    let fwd = &tables().0;
    bytes.iter().map(|&b| fwd[b as usize]).collect()
}

pub fn unicode_to_bytes(s: &str) -> Option<Vec<u8>> {
    let back = &tables().1;
    s.chars().map(|c| back.get(&c).copied()).collect()
}

impl TokenizerModel {
    /// Loads a vocabulary (JSON object token -> id) and ranked merges.
    /// Missing trace specials get fresh ids.
    pub fn from_vocab_and_merges(vocab_json: &str, merges_txt: &str) -> Result<Self, TokError> {
        let raw: BTreeMap<String, TokenId> =
            serde_json::from_str(vocab_json).map_err(|e| TokError::Vocab(e.to_string()))?;
        let mut vocab: Vec<Option<Vec<u8>>> = Vec::new();
        let mut by_text: HashMap<&str, TokenId> = HashMap::new();
        let mut specials = Vec::new();
        for (text, &id) in &raw {
            let bytes = if text.starts_with("<|") && text.ends_with("|>") {
                specials.push((text.clone(), id));
                text.as_bytes().to_vec()
            } else {
                unicode_to_bytes(text).ok_or_else(|| TokError::Vocab(format!("token {text:?} is not byte-encoded")))?
            };
            if id as usize >= vocab.len() {
                vocab.resize(id as usize + 1, None);
            }
            vocab[id as usize] = Some(bytes);
            by_text.insert(text, id);
        }
        let mut byte_ids = [0; 256];
        for b in 0..=255u8 {
            let key = byte_to_unicode(&[b]);
            byte_ids[b as usize] = *by_text
                .get(key.as_str())
                .ok_or_else(|| TokError::Vocab(format!("no token for byte {b:#04x}")))?;
        }
        let mut model = TokenizerModel {
            vocab,
            byte_ids,
            merges: Vec::new(),
            merge_index: HashMap::new(),
            specials: Vec::new(),
            pretokenizer: Pretokenizer::Gpt2,
        };
        let mut rank = 0;
        for (i, line) in merges_txt.lines().enumerate() {
            if line.starts_with("#version") || line.trim().is_empty() {
                continue;
            }
            let err = |message: String| TokError::Merges { line: i + 1, message };
            let (l, r) = line.split_once(' ').ok_or_else(|| err("expected two tokens".into()))?;
            let look = |t: &str| by_text.get(t).copied().ok_or_else(|| err(format!("{t:?} not in vocabulary")));
            let (li, ri) = (look(l)?, look(r)?);
            let merged = look(&format!("{l}{r}"))?;
            model.merge_index.insert((li, ri), (rank, merged));
            model.merges.push((li, ri));
            rank += 1;
        }
        for (text, id) in specials {
            model.register_special(&text, Some(id));
        }
        model.register_trace_specials();
        Ok(model)
    }

    pub fn from_files(vocab: &Path, merges: &Path) -> Result<Self, TokError> {
        Self::from_vocab_and_merges(&std::fs::read_to_string(vocab)?, &std::fs::read_to_string(merges)?)
    }

    /// The `(vocab.json, merges.txt)` contents for this model.
    pub fn to_vocab_and_merges(&self) -> (String, String) {
        let special_ids: Vec<TokenId> = self.specials.iter().map(|(_, id)| *id).collect();
        let mut vocab = serde_json::Map::new();
        for (id, bytes) in self.vocab.iter().enumerate() {
            let Some(bytes) = bytes else { continue };
            let text = if special_ids.contains(&(id as TokenId)) {
                String::from_utf8_lossy(bytes).into_owned()
            } else {
                byte_to_unicode(bytes)
            };
            vocab.insert(text, serde_json::Value::from(id));
        }
        let mut merges = String::from("#version: 0.2\n");
        for &(l, r) in &self.merges {
            let side = |id| byte_to_unicode(self.token_bytes(id).expect("known id"));
            merges.push_str(&format!("{} {}\n", side(l), side(r)));
        }
        (
            serde_json::to_string_pretty(&serde_json::Value::Object(vocab)).expect("json"),
            merges,
        )
    }

    pub fn save(&self, vocab: &Path, merges: &Path) -> Result<(), TokError> {
        let (v, m) = self.to_vocab_and_merges();
        std::fs::write(vocab, v)?;
        std::fs::write(merges, m)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_mapping_is_a_bijection() {
        let all: Vec<u8> = (0..=255).collect();
        let s = byte_to_unicode(&all);
        assert_eq!(s.chars().count(), 256);
        assert_eq!(unicode_to_bytes(&s).unwrap(), all);
        assert_eq!(byte_to_unicode(b" B"), "\u{120}B");
    }

    #[test]
    fn save_and_load_roundtrip() {
        let m = super::super::train_bpe(&["the cat sat on the mat with the hat"], 12).unwrap();
        let (v, mg) = m.to_vocab_and_merges();
        let back = TokenizerModel::from_vocab_and_merges(&v, &mg).unwrap();
        for s in ["the mat", "<|frame_sep|>hat", "zzz"] {
            assert_eq!(back.encode(s), m.encode(s), "{s}");
        }
    }

    #[test]
    fn bad_merge_line() {
        let m = TokenizerModel::bytes_only();
        let (v, _) = m.to_vocab_and_merges();
        let err = TokenizerModel::from_vocab_and_merges(&v, "#version: 0.2\na b\n").unwrap_err();
        assert!(matches!(err, TokError::Merges { line: 2, .. }), "{err}");
    }
}
