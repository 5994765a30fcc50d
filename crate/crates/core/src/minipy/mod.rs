//! MiniPy: the Python subset used by every benchmark program.
//!
//! Programs are lexed, parsed into an AST, and can be printed back with
//! [`unparse`]. Anything outside the subset is rejected with
//! [`ParseError::Unsupported`] rather than being silently misinterpreted.

pub mod ast;
pub mod lexer;
pub mod literal;
mod parser;
pub mod unparse;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ast::*;
pub use lexer::{tokenize, Lexed, Tok, Token, ENTRY_MARKER};
pub use literal::literal_eval;
pub use unparse::{unparse, unparse_expr};

/// Source position: 1-based line, 0-based column counted in characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl Span {
    pub fn new(line: usize, col: usize) -> Self {
        Span { line, col }
    }

    /// Moves the position onto an actual character of `src` (a line's
    /// terminating newline counts). Empty sources map to `1:0`.
    pub fn clamp_to(self, src: &str) -> Span {
        if src.is_empty() {
            return Span::new(1, 0);
        }
        let lines: Vec<&str> = src.split_inclusive('\n').collect();
        let line = self.line.clamp(1, lines.len());
        let width = lines[line - 1].chars().count();
        Span::new(line, self.col.min(width.saturating_sub(1)))
    }

    /// True when the span addresses a character inside `src`.
    pub fn is_within(self, src: &str) -> bool {
        if src.is_empty() {
            return self == Span::new(1, 0);
        }
        match src.split_inclusive('\n').nth(self.line.wrapping_sub(1)) {
            Some(l) => self.col < l.chars().count(),
            None => false,
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct LexError {
    pub span: Span,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("lex error at {0}")]
    Lex(#[from] LexError),
    #[error("{span}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        span: Span,
        expected: Vec<String>,
        found: String,
    },
    #[error("{span}: unsupported construct: {construct}")]
    Unsupported { construct: String, span: Span },
}

impl ParseError {
    pub fn span(&self) -> Span {
        match self {
            ParseError::Lex(e) => e.span,
            ParseError::Syntax { span, .. } | ParseError::Unsupported { span, .. } => *span,
        }
    }
}

/// A program as text plus where it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceProgram {
    pub source_text: String,
    pub file_name: Option<String>,
}

impl SourceProgram {
    pub fn new(source_text: impl Into<String>) -> Self {
        SourceProgram {
            source_text: source_text.into(),
            file_name: None,
        }
    }

    pub fn with_file_name(mut self, name: impl Into<String>) -> Self {
        self.file_name = Some(name.into());
        self
    }

    /// Line of the `def` carrying the entry marker comment, if any.
    pub fn entry_marker_line(&self) -> Option<usize> {
        tokenize(&self.source_text).ok()?.marker_line()
    }

    pub fn parse(&self) -> Result<Module, ParseError> {
        parse_source(&self.source_text)
    }
}

/// Tokenizes and parses a whole module.
pub fn parse_source(src: &str) -> Result<Module, ParseError> {
    let lexed = tokenize(src)?;
    parse_module(&lexed, src)
}

/// Parses an already tokenized module; `src` is used to keep error spans
/// inside the text.
pub fn parse_module(lexed: &Lexed, src: &str) -> Result<Module, ParseError> {
    parser::parse_lexed(lexed, src)
}

/// Parses a single expression such as `f(1, 3)` or a literal.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    parser::parse_expression_text(src, None)
}

impl Module {
    pub fn function(&self, name: &str) -> Option<&std::sync::Arc<FunctionDef>> {
        self.body.iter().find_map(|s| match &s.kind {
            StmtKind::FunctionDef(d) if d.name == name => Some(d),
            _ => None,
        })
    }

    /// The top-level function marked as trace entry.
    pub fn entry_function(&self) -> Option<&std::sync::Arc<FunctionDef>> {
        self.body.iter().find_map(|s| match &s.kind {
            StmtKind::FunctionDef(d) if d.entry_marker => Some(d),
            _ => None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const APP_A: &str = "def f(a,b):\n    y = a\n    for i in range(b):\n        y += y * i\n    return y\n\ndef main(): # << START_OF_TRACE\n    return f(1,3)\n";

    #[test]
    fn parses_golden_program() {
        let m = parse_source(APP_A).unwrap();
        assert_eq!(m.body.len(), 2);
        let main = m.entry_function().unwrap();
        assert_eq!(main.name, "main");
        assert_eq!(m.function("f").unwrap().params.len(), 2);
    }

    #[test]
    fn elif_is_nested_if() {
        let m = parse_source("def g(x):\n    if x:\n        return 1\n    elif x > 2:\n        return 2\n    else:\n        return 3\n").unwrap();
        let g = m.function("g").unwrap();
        let StmtKind::If { orelse, .. } = &g.body[0].kind else { panic!() };
        assert_eq!(orelse.len(), 1);
        assert_eq!(orelse[0].span.line, 4);
        assert!(matches!(orelse[0].kind, StmtKind::If { .. }));
    }

    #[test]
    fn docstring_extracted_only_with_following_statements() {
        let m = parse_source("def g():\n    \"\"\"Doc.\"\"\"\n    return 1\n\ndef h():\n    'only'\n").unwrap();
        assert_eq!(m.function("g").unwrap().docstring.as_deref(), Some("Doc."));
        assert_eq!(m.function("g").unwrap().body.len(), 1);
        assert_eq!(m.function("h").unwrap().docstring, None);
    }

    #[test]
    fn rejects_out_of_subset() {
        for (src, what) in [
            ("class A:\n    pass\n", "class"),
            ("import os\n", "import"),
            ("def f():\n    try:\n        pass\n    except:\n        pass\n", "try"),
            ("def f():\n    with x:\n        pass\n", "with"),
            ("def f():\n    yield 1\n", "yield"),
            ("@d\ndef f():\n    pass\n", "decorator"),
            ("def f(*a):\n    pass\n", "variadic"),
            ("def f():\n    for i in x:\n        pass\n    else:\n        pass\n", "for-else"),
            ("x = b'a'\n", "bytes"),
            ("def f():\n    if (y := 3):\n        pass\n", "assignment expression"),
        ] {
            match parse_source(src) {
                Err(ParseError::Unsupported { construct, span }) => {
                    assert!(construct.contains(what), "{construct} vs {what}");
                    assert!(span.is_within(src));
                }
                other => panic!("{src:?} -> {other:?}"),
            }
        }
    }

    #[test]
    fn syntax_error_reports_expected() {
        let err = parse_source("def f(a b):\n    pass\n").unwrap_err();
        match err {
            ParseError::Syntax { span, expected, .. } => {
                assert_eq!(span.line, 1);
                assert!(!expected.is_empty());
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn fstring_fields() {
        let e = parse_expr("f\"c = {c!r:>3} {{x}}\"").unwrap();
        let ExprKind::FString(parts) = e.kind else { panic!() };
        assert_eq!(parts.len(), 3);
        assert!(matches!(&parts[1], FStringPart::Field { conversion: Some(Conversion::Repr), format_spec: Some(s), .. } if s == ">3"));
        assert_eq!(parts[2], FStringPart::Literal(" {x}".into()));
    }

    #[test]
    fn clamp_keeps_span_in_text() {
        let src = "ab\n\ncd";
        assert_eq!(Span::new(9, 9).clamp_to(src), Span::new(3, 1));
        assert_eq!(Span::new(2, 5).clamp_to(src), Span::new(2, 0));
        assert!(Span::new(2, 0).is_within(src));
        assert!(!Span::new(1, 3).is_within(src));
    }
}
