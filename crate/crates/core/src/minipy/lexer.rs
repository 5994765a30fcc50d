//! Tokenizer for MiniPy source text.
//!
//! Produces a flat token stream with `Indent`/`Dedent` markers, the way the
//! CPython tokenizer does. Comments are kept aside as trivia so the entry
//! marker (`# << START_OF_TRACE`) can be attached to its `def` line later.

use num_bigint::BigInt;
use num_traits::Num;

use super::{LexError, Span};

pub const ENTRY_MARKER: &str = "<< START_OF_TRACE";

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    Int(BigInt),
    Float(f64),
    Str(String),
    /// Body of an f-string literal with literal-part escapes decoded and the
    /// replacement fields left verbatim.
    FStr(String),
    /// A string prefix this subset does not support (`b`, `u` is accepted).
    BytesStr,
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comment {
    pub line: usize,
    pub text: String,
}

#[derive(Debug, Clone, Default)]
pub struct Lexed {
    pub tokens: Vec<Token>,
    pub comments: Vec<Comment>,
}

impl Lexed {
    /// Line of the first comment carrying the entry marker.
    pub fn marker_line(&self) -> Option<usize> {
        self.comments
            .iter()
            .find(|c| c.text.contains(ENTRY_MARKER))
            .map(|c| c.line)
    }
}

// Longest operators first so greedy matching works.
const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=", ">=", "==", "!=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "+", "-", "*", "/", "%", "&", "|", "^", "~",
    "<", ">", "(", ")", "[", "]", "{", "}", ",", ":", ".", ";", "=", "@",
];

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    out: Lexed,
    indents: Vec<usize>,
    depth: usize,
    src: &'a str,
}

pub fn tokenize(src: &str) -> Result<Lexed, LexError> {
    let mut lx = Lexer {
        chars: src.chars().collect(),
        pos: 0,
        line: 1,
        col: 0,
        out: Lexed::default(),
        indents: vec![0],
        depth: 0,
        src,
    };
    lx.run()?;
    Ok(lx.out)
}

impl Lexer<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 0;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn here(&self) -> Span {
        Span::new(self.line, self.col)
    }

    fn err(&self, span: Span, msg: impl Into<String>) -> LexError {
        LexError {
            span: span.clamp_to(self.src),
            message: msg.into(),
        }
    }

    fn push(&mut self, tok: Tok, span: Span) {
        self.out.tokens.push(Token { tok, span });
    }

    fn last_is_newline_or_start(&self) -> bool {
        matches!(
            self.out.tokens.last().map(|t| &t.tok),
            None | Some(Tok::Newline) | Some(Tok::Indent) | Some(Tok::Dedent)
        )
    }

    fn run(&mut self) -> Result<(), LexError> {
        let mut at_line_start = true;
        while self.pos < self.chars.len() {
            if at_line_start && self.depth == 0 {
                at_line_start = false;
                if self.handle_indentation()? {
                    at_line_start = true;
                    continue;
                }
            }
            let c = match self.peek() {
                Some(c) => c,
                None => break,
            };
            match c {
                ' ' | '\t' | '\x0c' | '\r' => {
                    self.bump();
                }
                '\n' => {
                    let span = self.here();
                    self.bump();
                    if self.depth == 0 {
                        if !self.last_is_newline_or_start() {
                            self.push(Tok::Newline, span);
                        }
                        at_line_start = true;
                    }
                }
                '#' => self.comment(),
                '\\' if self.peek_at(1) == Some('\n') => {
                    self.bump();
                    self.bump();
                }
                '\\' if self.peek_at(1) == Some('\r') && self.peek_at(2) == Some('\n') => {
                    self.bump();
                    self.bump();
                    self.bump();
                }
                c if c.is_ascii_digit() || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit())) => {
                    self.number()?
                }
                c if is_ident_start(c) => self.name_or_string()?,
                '"' | '\'' => {
                    let span = self.here();
                    let s = self.string_body(false)?;
                    self.push(Tok::Str(s), span);
                }
                _ => self.operator()?,
            }
        }
        let span = self.here();
        if self.depth > 0 {
            return Err(self.err(span, "unexpected end of input inside brackets"));
        }
        if !self.last_is_newline_or_start() {
            self.push(Tok::Newline, span);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(Tok::Dedent, span);
        }
        self.push(Tok::Eof, span);
        Ok(())
    }

    /// Measures leading whitespace of a logical line. Returns true when the
    /// line was blank or comment-only and has been consumed.
    fn handle_indentation(&mut self) -> Result<bool, LexError> {
        let mut width = 0usize;
        while let Some(c) = self.peek() {
            match c {
                ' ' => width += 1,
                '\t' => width = (width / 8 + 1) * 8,
                '\x0c' => width = 0,
                _ => break,
            }
            self.bump();
        }
        match self.peek() {
            None => return Ok(true),
            Some('\n') => {
                self.bump();
                return Ok(true);
            }
            Some('\r') if self.peek_at(1) == Some('\n') => {
                self.bump();
                self.bump();
                return Ok(true);
            }
            Some('#') => {
                self.comment();
                if self.peek() == Some('\n') {
                    self.bump();
                }
                return Ok(true);
            }
            _ => {}
        }
        let span = self.here();
        let current = *self.indents.last().unwrap_or(&0);
        if width > current {
            if self.out.tokens.is_empty() {
                return Err(self.err(span, "unexpected indent"));
            }
            self.indents.push(width);
            self.push(Tok::Indent, span);
        } else if width < current {
            while width < *self.indents.last().unwrap_or(&0) {
                self.indents.pop();
                self.push(Tok::Dedent, span);
            }
            if width != *self.indents.last().unwrap_or(&0) {
                return Err(self.err(span, "unindent does not match any outer indentation level"));
            }
        }
        Ok(false)
    }

    fn comment(&mut self) {
        let line = self.line;
        let mut text = String::new();
        while let Some(c) = self.peek() {
            if c == '\n' {
                break;
            }
            text.push(c);
            self.bump();
        }
        self.out.comments.push(Comment {
            line,
            text: text.trim_end_matches('\r').to_string(),
        });
    }

    fn number(&mut self) -> Result<(), LexError> {
        let span = self.here();
        let mut text = String::new();
        let radix = if self.peek() == Some('0') {
            match self.peek_at(1) {
                Some('x' | 'X') => 16,
                Some('o' | 'O') => 8,
                Some('b' | 'B') => 2,
                _ => 10,
            }
        } else {
            10
        };
        if radix != 10 {
            self.bump();
            self.bump();
            while let Some(c) = self.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    if c != '_' {
                        text.push(c);
                    }
                    self.bump();
                } else {
                    break;
                }
            }
            let value = BigInt::from_str_radix(&text, radix)
                .map_err(|_| self.err(span, format!("invalid integer literal {text:?}")))?;
            self.push(Tok::Int(value), span);
            return Ok(());
        }
        let mut is_float = false;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == '_' {
                if c != '_' {
                    text.push(c);
                }
                self.bump();
            } else if c == '.' && !is_float && !text.contains('e') {
                is_float = true;
                text.push(c);
                self.bump();
            } else if (c == 'e' || c == 'E') && !text.contains('e') {
                let next = self.peek_at(1);
                let next2 = self.peek_at(2);
                let ok = next.is_some_and(|d| d.is_ascii_digit())
                    || (matches!(next, Some('+' | '-')) && next2.is_some_and(|d| d.is_ascii_digit()));
                if !ok {
                    break;
                }
                is_float = true;
                text.push('e');
                self.bump();
                if matches!(self.peek(), Some('+' | '-')) {
                    text.push(self.bump().unwrap_or('+'));
                }
            } else {
                break;
            }
        }
        if self.peek().is_some_and(|c| c == 'j' || c == 'J') {
            return Err(self.err(span, "complex literals are not supported"));
        }
        if self.peek().is_some_and(is_ident_start) {
            return Err(self.err(self.here(), "invalid character in numeric literal"));
        }
        if is_float {
            let v: f64 = text
                .parse()
                .map_err(|_| self.err(span, format!("invalid float literal {text:?}")))?;
            self.push(Tok::Float(v), span);
        } else {
            if text.len() > 1 && text.starts_with('0') && text.chars().any(|c| c != '0') {
                return Err(self.err(span, "leading zeros in decimal integer literals are not permitted"));
            }
            let v = BigInt::from_str_radix(&text, 10)
                .map_err(|_| self.err(span, format!("invalid integer literal {text:?}")))?;
            self.push(Tok::Int(v), span);
        }
        Ok(())
    }

    fn name_or_string(&mut self) -> Result<(), LexError> {
        let span = self.here();
        // string prefixes
        let mut prefix_len = 0;
        while prefix_len < 2 && self.peek_at(prefix_len).is_some_and(|c| "rRfFbBuU".contains(c)) {
            prefix_len += 1;
        }
        if prefix_len > 0 && matches!(self.peek_at(prefix_len), Some('"' | '\'')) {
            let prefix: String = (0..prefix_len)
                .filter_map(|i| self.peek_at(i))
                .collect::<String>()
                .to_ascii_lowercase();
            let valid = matches!(prefix.as_str(), "r" | "f" | "b" | "u" | "rf" | "fr" | "rb" | "br");
            if valid {
                for _ in 0..prefix_len {
                    self.bump();
                }
                let raw = prefix.contains('r');
                if prefix.contains('b') {
                    self.string_body(raw)?;
                    self.push(Tok::BytesStr, span);
                } else if prefix.contains('f') {
                    let body = self.fstring_body(raw)?;
                    self.push(Tok::FStr(body), span);
                } else {
                    let s = self.string_body(raw)?;
                    self.push(Tok::Str(s), span);
                }
                return Ok(());
            }
        }
        let mut name = String::new();
        while let Some(c) = self.peek() {
            if is_ident_continue(c) {
                name.push(c);
                self.bump();
            } else {
                break;
            }
        }
        self.push(Tok::Name(name), span);
        Ok(())
    }

    fn quote_kind(&self) -> (char, bool) {
        let q = self.peek().unwrap_or('"');
        let triple = self.peek_at(1) == Some(q) && self.peek_at(2) == Some(q);
        (q, triple)
    }

    fn string_body(&mut self, raw: bool) -> Result<String, LexError> {
        let span = self.here();
        let (q, triple) = self.quote_kind();
        for _ in 0..if triple { 3 } else { 1 } {
            self.bump();
        }
        let mut out = String::new();
        loop {
            let c = match self.peek() {
                Some(c) => c,
                None => return Err(self.err(span, "unterminated string literal")),
            };
            if c == q {
                if !triple {
                    self.bump();
                    break;
                }
                if self.peek_at(1) == Some(q) && self.peek_at(2) == Some(q) {
                    self.bump();
                    self.bump();
                    self.bump();
                    break;
                }
                out.push(c);
                self.bump();
                continue;
            }
            if c == '\n' && !triple {
                return Err(self.err(span, "unterminated string literal"));
            }
            if c == '\\' {
                let esc_span = self.here();
                self.bump();
                let e = match self.bump() {
                    Some(e) => e,
                    None => return Err(self.err(span, "unterminated string literal")),
                };
                if raw {
                    out.push('\\');
                    out.push(e);
                    continue;
                }
                self.escape(e, esc_span, &mut out)?;
                continue;
            }
            out.push(c);
            self.bump();
        }
        Ok(out)
    }

    fn escape(&mut self, e: char, span: Span, out: &mut String) -> Result<(), LexError> {
        match e {
            '\n' => {}
            '\\' => out.push('\\'),
            '\'' => out.push('\''),
            '"' => out.push('"'),
            'n' => out.push('\n'),
            't' => out.push('\t'),
            'r' => out.push('\r'),
            '0' => out.push('\0'),
            'a' => out.push('\x07'),
            'b' => out.push('\x08'),
            'f' => out.push('\x0c'),
            'v' => out.push('\x0b'),
            'x' | 'u' | 'U' => {
                let n = match e {
                    'x' => 2,
                    'u' => 4,
                    _ => 8,
                };
                let mut hex = String::new();
                for _ in 0..n {
                    match self.bump() {
                        Some(h) if h.is_ascii_hexdigit() => hex.push(h),
                        _ => return Err(self.err(span, "truncated escape sequence")),
                    }
                }
                let cp = u32::from_str_radix(&hex, 16).map_err(|_| self.err(span, "bad escape"))?;
                let ch = char::from_u32(cp).ok_or_else(|| self.err(span, "escape is not a valid code point"))?;
                out.push(ch);
            }
            other => {
                out.push('\\');
                out.push(other);
            }
        }
        Ok(())
    }

    /// Scans an f-string body, returning it with escapes in the literal parts
    /// already decoded but replacement fields left verbatim.
    fn fstring_body(&mut self, raw: bool) -> Result<String, LexError> {
        let span = self.here();
        let (q, triple) = self.quote_kind();
        for _ in 0..if triple { 3 } else { 1 } {
            self.bump();
        }
        let mut out = String::new();
        let mut depth = 0usize;
        loop {
            let c = match self.peek() {
                Some(c) => c,
                None => return Err(self.err(span, "unterminated f-string")),
            };
            if depth == 0 {
                if c == q {
                    if !triple {
                        self.bump();
                        break;
                    }
                    if self.peek_at(1) == Some(q) && self.peek_at(2) == Some(q) {
                        self.bump();
                        self.bump();
                        self.bump();
                        break;
                    }
                }
                if c == '\n' && !triple {
                    return Err(self.err(span, "unterminated f-string"));
                }
                if c == '\\' && !raw {
                    let esc_span = self.here();
                    self.bump();
                    let e = self.bump().ok_or_else(|| self.err(span, "unterminated f-string"))?;
                    let mut decoded = String::new();
                    self.escape(e, esc_span, &mut decoded)?;
                    // keep braces produced by escapes literal
                    for ch in decoded.chars() {
                        match ch {
                            '{' => out.push_str("{{"),
                            '}' => out.push_str("}}"),
                            _ => out.push(ch),
                        }
                    }
                    continue;
                }
                if c == '{' {
                    if self.peek_at(1) == Some('{') {
                        out.push_str("{{");
                        self.bump();
                        self.bump();
                        continue;
                    }
                    depth = 1;
                } else if c == '}' && self.peek_at(1) == Some('}') {
                    out.push_str("}}");
                    self.bump();
                    self.bump();
                    continue;
                }
                out.push(c);
                self.bump();
                continue;
            }
            // inside a replacement field
            match c {
                '\'' | '"' => {
                    // nested string literal, copied verbatim
                    let inner_q = c;
                    out.push(c);
                    self.bump();
                    loop {
                        match self.bump() {
                            Some('\\') => {
                                out.push('\\');
                                if let Some(n) = self.bump() {
                                    out.push(n);
                                }
                            }
                            Some(ch) if ch == inner_q => {
                                out.push(ch);
                                break;
                            }
                            Some('\n') | None => return Err(self.err(span, "unterminated string in f-string")),
                            Some(ch) => out.push(ch),
                        }
                    }
                }
                '{' | '(' | '[' => {
                    depth += 1;
                    out.push(c);
                    self.bump();
                }
                '}' | ')' | ']' => {
                    depth -= 1;
                    out.push(c);
                    self.bump();
                }
                '\n' if !triple => return Err(self.err(span, "unterminated f-string")),
                _ => {
                    out.push(c);
                    self.bump();
                }
            }
        }
        if depth != 0 {
            return Err(self.err(span, "unbalanced braces in f-string"));
        }
        Ok(out)
    }

    fn operator(&mut self) -> Result<(), LexError> {
        let span = self.here();
        for op in OPERATORS {
            let n = op.chars().count();
            let matches = op.chars().enumerate().all(|(i, oc)| self.peek_at(i) == Some(oc));
            if matches {
                for _ in 0..n {
                    self.bump();
                }
                match *op {
                    "(" | "[" | "{" => self.depth += 1,
                    ")" | "]" | "}" => {
                        if self.depth == 0 {
                            return Err(self.err(span, format!("unmatched '{op}'")));
                        }
                        self.depth -= 1;
                    }
                    _ => {}
                }
                self.push(Tok::Op(op), span);
                return Ok(());
            }
        }
        let c = self.peek().unwrap_or(' ');
        Err(self.err(span, format!("invalid character {c:?}")))
    }
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().tokens.into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn simple_assignment() {
        assert_eq!(
            kinds("y = x + 1"),
            vec![
                Tok::Name("y".into()),
                Tok::Op("="),
                Tok::Name("x".into()),
                Tok::Op("+"),
                Tok::Int(1.into()),
                Tok::Newline,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn empty_source_is_just_eof() {
        assert_eq!(kinds(""), vec![Tok::Eof]);
    }

    #[test]
    fn indentation_produces_indent_dedent() {
        let toks = kinds("def f():\n    return 1\nx = 2\n");
        assert!(toks.contains(&Tok::Indent));
        assert!(toks.contains(&Tok::Dedent));
    }

    #[test]
    fn marker_comment_is_kept_as_trivia() {
        let lx = tokenize("def main(): # << START_OF_TRACE\n    return 0\n").unwrap();
        assert_eq!(lx.marker_line(), Some(1));
        assert_eq!(lx.comments[0].text, "# << START_OF_TRACE");
    }

    #[test]
    fn inconsistent_dedent_is_an_error() {
        let err = tokenize("if x:\n        y = 1\n    z = 2\n").unwrap_err();
        assert_eq!(err.span.line, 3);
    }

    #[test]
    fn string_escapes_and_prefixes() {
        assert_eq!(kinds(r#"'a\nb'"#)[0], Tok::Str("a\nb".into()));
        assert_eq!(kinds(r#"r'a\nb'"#)[0], Tok::Str("a\\nb".into()));
        assert_eq!(kinds(r#"f"c = {c}""#)[0], Tok::FStr("c = {c}".into()));
        assert_eq!(kinds("'''x\ny'''")[0], Tok::Str("x\ny".into()));
    }

    #[test]
    fn numbers() {
        assert_eq!(kinds("0x1f")[0], Tok::Int(31.into()));
        assert_eq!(kinds("1_000")[0], Tok::Int(1000.into()));
        assert_eq!(kinds("2.5")[0], Tok::Float(2.5));
        assert_eq!(kinds("1e3")[0], Tok::Float(1000.0));
        assert!(tokenize("012").is_err());
    }

    #[test]
    fn brackets_suppress_newlines() {
        let toks = kinds("x = [1,\n     2]\n");
        assert_eq!(toks.iter().filter(|t| **t == Tok::Newline).count(), 1);
    }

    #[test]
    fn unterminated_string_reports_location() {
        let err = tokenize("x = 'abc\n").unwrap_err();
        assert_eq!((err.span.line, err.span.col), (1, 4));
    }
}
