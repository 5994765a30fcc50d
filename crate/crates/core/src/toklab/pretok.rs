//! Pre-splitting of text into chunks that merges never cross.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pretokenizer {
    /// The whole text is one chunk.
    None,
    /// GPT-2 style: contractions, ` ?letters`, ` ?digits`, ` ?other`, and
    /// whitespace runs that leave their last space to the next word.
    #[default]
    Gpt2,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Letter,
    Number,
    Space,
    Other,
}

fn class(c: char) -> Class {
    if c.is_whitespace() {
        Class::Space
    } else if c.is_alphabetic() {
        Class::Letter
    } else if c.is_numeric() {
        Class::Number
    } else {
        Class::Other
    }
}

const CONTRACTIONS: [&str; 7] = ["'s", "'t", "'re", "'ve", "'m", "'ll", "'d"];

impl Pretokenizer {
    /// Byte ranges of the chunks of `text`, covering it exactly.
    pub fn split(self, text: &str) -> Vec<(usize, usize)> {
        match self {
            Pretokenizer::None if text.is_empty() => Vec::new(),
            Pretokenizer::None => vec![(0, text.len())],
            Pretokenizer::Gpt2 => gpt2_split(text),
        }
    }
}

fn gpt2_split(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let end_of = |k: usize| chars.get(k).map_or(text.len(), |&(b, _)| b);
    let run = |mut k: usize, cls: Class| {
        while k < chars.len() && class(chars[k].1) == cls {
            k += 1;
        }
        k
    };
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let start = chars[i].0;
        let rest = &text[start..];
        if let Some(c) = CONTRACTIONS.iter().find(|c| rest.starts_with(**c)) {
            out.push((start, start + c.len()));
            i += c.chars().count();
            continue;
        }
        let c = chars[i].1;
        let mut j = i;
        if c == ' ' && i + 1 < chars.len() && class(chars[i + 1].1) != Class::Space {
            j = i + 1;
        }
        let cls = class(chars[j].1);
        let k = if cls != Class::Space {
            run(j + 1, cls)
        } else {
            let k = run(i, Class::Space);
            if k == chars.len() || k - i == 1 {
                k
            } else {
                // leave the last whitespace char for the following word
                k - 1
            }
        };
        out.push((start, end_of(k)));
        i = k;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pieces(s: &str) -> Vec<&str> {
        Pretokenizer::Gpt2.split(s).into_iter().map(|(a, b)| &s[a..b]).collect()
    }

    #[test]
    fn gpt2_style_chunks() {
        assert_eq!(pieces("Hello world"), ["Hello", " world"]);
        assert_eq!(pieces(" B "), [" B", " "]);
        assert_eq!(pieces(" BaB "), [" BaB", " "]);
        assert_eq!(pieces("a-.-.b"), ["a", "-.-.", "b"]);
        assert_eq!(pieces("x  = 12"), ["x", " ", " =", " 12"]);
        assert_eq!(pieces("it's\n\nok"), ["it", "'s", "\n", "\n", "ok"]);
        assert_eq!(pieces("end   "), ["end", "   "]);
        assert!(pieces("").is_empty());
    }

    #[test]
    fn chunks_cover_text() {
        for s in ["{\"a\": \"..\"}", "  x\ty \u{e9}t\u{e9} 3.5", "\n"] {
            assert_eq!(pieces(s).concat(), s);
        }
        assert_eq!(Pretokenizer::None.split("abc"), vec![(0, 3)]);
    }
}
