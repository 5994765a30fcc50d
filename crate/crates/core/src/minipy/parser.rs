//! Recursive-descent parser producing the MiniPy AST.

use std::sync::Arc;

use super::ast::*;
use super::lexer::{tokenize, Lexed, Tok, Token};
use super::{ParseError, Span};

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in",
    "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while", "with",
    "yield",
];

/// Statement keywords outside the subset, reported by name.
const UNSUPPORTED_STMT: &[&str] = &[
    "class", "import", "from", "async", "await", "try", "except", "finally", "with", "yield",
    "global", "nonlocal", "del", "assert",
];

pub(crate) struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    marker_line: Option<usize>,
    src: &'a str,
}

pub(crate) fn parse_lexed(lexed: &Lexed, src: &str) -> Result<Module, ParseError> {
    let mut p = Parser {
        toks: &lexed.tokens,
        pos: 0,
        marker_line: lexed.marker_line(),
        src,
    };
    let mut body = Vec::new();
    while !p.at_eof() {
        if p.eat(&Tok::Newline) {
            continue;
        }
        p.statement(&mut body)?;
    }
    if let Some(line) = p.marker_line {
        let on_def = body.iter().any(|s| match &s.kind {
            StmtKind::FunctionDef(d) => d.entry_marker && s.span.line == line,
            _ => false,
        });
        let nested_def = {
            let mut found = false;
            walk_stmts(&body, &mut |s| {
                if let StmtKind::FunctionDef(d) = &s.kind {
                    found |= d.entry_marker;
                }
            });
            found
        };
        if !on_def && !nested_def {
            return Err(ParseError::Syntax {
                span: Span::new(line, 0).clamp_to(src),
                expected: vec!["function definition on the entry-marker line".into()],
                found: "other statement".into(),
            });
        }
    }
    Ok(Module { body })
}

/// Parses a single expression (used for f-string fields, entry calls and
/// answer literals).
pub(crate) fn parse_expression_text(text: &str, respan: Option<Span>) -> Result<Expr, ParseError> {
    let mut lexed = tokenize(text)?;
    if let Some(span) = respan {
        for t in &mut lexed.tokens {
            t.span = span;
        }
    }
    let mut p = Parser {
        toks: &lexed.tokens,
        pos: 0,
        marker_line: None,
        src: text,
    };
    let e = p.testlist()?;
    p.eat(&Tok::Newline);
    if !p.at_eof() {
        return Err(p.unexpected(&["end of expression"]));
    }
    Ok(e)
}

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Name(n) => format!("'{n}'"),
        Tok::Int(i) => format!("integer {i}"),
        Tok::Float(f) => format!("float {f}"),
        Tok::Str(_) => "string".into(),
        Tok::FStr(_) => "f-string".into(),
        Tok::BytesStr => "bytes literal".into(),
        Tok::Op(o) => format!("'{o}'"),
        Tok::Newline => "newline".into(),
        Tok::Indent => "indent".into(),
        Tok::Dedent => "dedent".into(),
        Tok::Eof => "end of input".into(),
    }
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos.min(self.toks.len() - 1)].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos.min(self.toks.len() - 1)].span
    }

    fn advance(&mut self) -> &Token {
        let t = &self.toks[self.pos.min(self.toks.len() - 1)];
        if self.pos < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.advance();
            true
        } else {
            false
        }
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.peek(), Tok::Op(o) if *o == op)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.is_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Name(n) if n == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        ParseError::Syntax {
            span: self.span().clamp_to(self.src),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: describe(self.peek()),
        }
    }

    fn unsupported(&self, construct: &str, span: Span) -> ParseError {
        ParseError::Unsupported {
            construct: construct.to_string(),
            span: span.clamp_to(self.src),
        }
    }

    fn expect_op(&mut self, op: &str) -> Result<(), ParseError> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(self.unexpected(&[op]))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&[kw]))
        }
    }

    fn expect_name(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Name(n) if !is_keyword(&n) => {
                self.advance();
                Ok(n)
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn expect_newline(&mut self) -> Result<(), ParseError> {
        if self.eat(&Tok::Newline) || self.at_eof() {
            Ok(())
        } else {
            Err(self.unexpected(&["newline"]))
        }
    }

    // ----- statements -------------------------------------------------------

    fn statement(&mut self, out: &mut Vec<Stmt>) -> Result<(), ParseError> {
        let span = self.span();
        if self.is_op("@") {
            return Err(self.unsupported("decorator", span));
        }
        if let Tok::Name(n) = self.peek().clone() {
            if UNSUPPORTED_STMT.contains(&n.as_str()) {
                return Err(self.unsupported(&n, span));
            }
            match n.as_str() {
                "def" => {
                    out.push(self.funcdef()?);
                    return Ok(());
                }
                "if" => {
                    self.advance();
                    out.push(self.if_rest(span)?);
                    return Ok(());
                }
                "for" => {
                    out.push(self.for_stmt()?);
                    return Ok(());
                }
                "while" => {
                    out.push(self.while_stmt()?);
                    return Ok(());
                }
                "match" if matches!(self.peek_at(1), Tok::Name(_)) => {
                    return Err(self.unsupported("match", span));
                }
                _ => {}
            }
        }
        if matches!(self.peek(), Tok::Indent) {
            return Err(self.unexpected(&["statement"]));
        }
        self.simple_stmts(out)
    }

    fn simple_stmts(&mut self, out: &mut Vec<Stmt>) -> Result<(), ParseError> {
        loop {
            out.push(self.small_stmt()?);
            if self.eat_op(";") {
                if matches!(self.peek(), Tok::Newline | Tok::Eof) {
                    break;
                }
                continue;
            }
            break;
        }
        self.expect_newline()
    }

    fn small_stmt(&mut self) -> Result<Stmt, ParseError> {
        let span = self.span();
        if let Tok::Name(n) = self.peek().clone() {
            if UNSUPPORTED_STMT.contains(&n.as_str()) {
                return Err(self.unsupported(&n, span));
            }
            match n.as_str() {
                "pass" => {
                    self.advance();
                    return Ok(Stmt::new(StmtKind::Pass, span));
                }
                "break" => {
                    self.advance();
                    return Ok(Stmt::new(StmtKind::Break, span));
                }
                "continue" => {
                    self.advance();
                    return Ok(Stmt::new(StmtKind::Continue, span));
                }
                "return" => {
                    self.advance();
                    let value = if self.at_stmt_end() { None } else { Some(self.testlist()?) };
                    return Ok(Stmt::new(StmtKind::Return(value), span));
                }
                "raise" => {
                    self.advance();
                    let value = if self.at_stmt_end() { None } else { Some(self.test()?) };
                    if self.is_kw("from") {
                        return Err(self.unsupported("raise from", self.span()));
                    }
                    return Ok(Stmt::new(StmtKind::Raise(value), span));
                }
                _ => {}
            }
        }
        let lhs = self.testlist()?;
        if self.is_op("=") {
            self.advance();
            let value = self.testlist()?;
            if self.is_op("=") {
                return Err(self.unsupported("chained assignment", self.span()));
            }
            let kind = match lhs.kind {
                ExprKind::Tuple(items) | ExprKind::List(items) => StmtKind::TupleAssign {
                    targets: items
                        .into_iter()
                        .map(|e| self.to_target(e))
                        .collect::<Result<_, _>>()?,
                    value,
                },
                _ => StmtKind::Assign { target: self.to_target(lhs)?, value },
            };
            return Ok(Stmt::new(kind, span));
        }
        if let Tok::Op(op) = self.peek() {
            let aug = match *op {
                "+=" => Some(BinOp::Add),
                "-=" => Some(BinOp::Sub),
                "*=" => Some(BinOp::Mul),
                "/=" => Some(BinOp::Div),
                "//=" => Some(BinOp::FloorDiv),
                "%=" => Some(BinOp::Mod),
                "**=" => Some(BinOp::Pow),
                "&=" => Some(BinOp::BitAnd),
                "|=" => Some(BinOp::BitOr),
                "^=" => Some(BinOp::BitXor),
                "<<=" => Some(BinOp::LShift),
                ">>=" => Some(BinOp::RShift),
                _ => None,
            };
            if let Some(op) = aug {
                self.advance();
                let target = self.to_target(lhs)?;
                if matches!(target, Target::Tuple(_)) {
                    return Err(ParseError::Syntax {
                        span: span.clamp_to(self.src),
                        expected: vec!["single augmented-assignment target".into()],
                        found: "tuple".into(),
                    });
                }
                let value = self.testlist()?;
                return Ok(Stmt::new(StmtKind::AugAssign { target, op, value }, span));
            }
            if *op == ":" {
                return Err(self.unsupported("annotated assignment", self.span()));
            }
        }
        Ok(Stmt::new(StmtKind::Expr(lhs), span))
    }

    fn at_stmt_end(&self) -> bool {
        matches!(self.peek(), Tok::Newline | Tok::Eof) || self.is_op(";")
    }

    fn to_target(&self, e: Expr) -> Result<Target, ParseError> {
        match e.kind {
            ExprKind::Name(n) => Ok(Target::Name(n)),
            ExprKind::Subscript { value, index } => Ok(Target::Subscript { value, index }),
            ExprKind::Tuple(items) | ExprKind::List(items) => Ok(Target::Tuple(
                items.into_iter().map(|i| self.to_target(i)).collect::<Result<_, _>>()?,
            )),
            ExprKind::Attribute { .. } => Err(self.unsupported("attribute assignment", e.span)),
            _ => Err(ParseError::Syntax {
                span: e.span.clamp_to(self.src),
                expected: vec!["assignment target".into()],
                found: "expression".into(),
            }),
        }
    }

    fn suite(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.expect_op(":")?;
        let mut body = Vec::new();
        if self.eat(&Tok::Newline) {
            if !self.eat(&Tok::Indent) {
                return Err(self.unexpected(&["indented block"]));
            }
            while !self.eat(&Tok::Dedent) {
                if self.at_eof() {
                    break;
                }
                if self.eat(&Tok::Newline) {
                    continue;
                }
                self.statement(&mut body)?;
            }
        } else {
            self.simple_stmts(&mut body)?;
        }
        Ok(body)
    }

    fn params(&mut self, close: &str) -> Result<Vec<Param>, ParseError> {
        let mut params: Vec<Param> = Vec::new();
        while !self.is_op(close) {
            let span = self.span();
            if self.is_op("*") || self.is_op("**") || self.is_op("/") {
                return Err(self.unsupported("variadic or positional-only parameters", span));
            }
            let name = self.expect_name()?;
            if close == ")" && self.is_op(":") {
                return Err(self.unsupported("parameter annotation", self.span()));
            }
            let default = if self.eat_op("=") { Some(self.test()?) } else { None };
            if default.is_none() && params.iter().any(|p| p.default.is_some()) {
                return Err(ParseError::Syntax {
                    span: span.clamp_to(self.src),
                    expected: vec!["default value".into()],
                    found: "parameter without default after parameter with default".into(),
                });
            }
            if params.iter().any(|p| p.name == name) {
                return Err(ParseError::Syntax {
                    span: span.clamp_to(self.src),
                    expected: vec!["distinct parameter names".into()],
                    found: format!("duplicate parameter '{name}'"),
                });
            }
            params.push(Param { name, default });
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(params)
    }

    fn funcdef(&mut self) -> Result<Stmt, ParseError> {
        let span = self.span();
        self.expect_kw("def")?;
        let name = self.expect_name()?;
        self.expect_op("(")?;
        let params = self.params(")")?;
        self.expect_op(")")?;
        if self.is_op("->") {
            return Err(self.unsupported("return annotation", self.span()));
        }
        let mut body = self.suite()?;
        let mut docstring = None;
        if body.len() > 1 {
            if let StmtKind::Expr(Expr { kind: ExprKind::Constant(Constant::Str(s)), .. }) = &body[0].kind {
                docstring = Some(s.clone());
                body.remove(0);
            }
        }
        let entry_marker = self.marker_line == Some(span.line);
        Ok(Stmt::new(
            StmtKind::FunctionDef(Arc::new(FunctionDef { name, params, docstring, body, entry_marker })),
            span,
        ))
    }

    fn if_rest(&mut self, span: Span) -> Result<Stmt, ParseError> {
        let test = self.namedexpr_test()?;
        let body = self.suite()?;
        let orelse = if self.is_kw("elif") {
            let elif_span = self.span();
            self.advance();
            vec![self.if_rest(elif_span)?]
        } else if self.eat_kw("else") {
            self.suite()?
        } else {
            Vec::new()
        };
        Ok(Stmt::new(StmtKind::If { test, body, orelse }, span))
    }

    fn for_stmt(&mut self) -> Result<Stmt, ParseError> {
        let span = self.span();
        self.expect_kw("for")?;
        let target = self.target_list()?;
        self.expect_kw("in")?;
        let iter = self.testlist()?;
        let body = self.suite()?;
        if self.is_kw("else") {
            return Err(self.unsupported("for-else", self.span()));
        }
        Ok(Stmt::new(StmtKind::For { target, iter, body }, span))
    }

    fn while_stmt(&mut self) -> Result<Stmt, ParseError> {
        let span = self.span();
        self.expect_kw("while")?;
        let test = self.namedexpr_test()?;
        let body = self.suite()?;
        if self.is_kw("else") {
            return Err(self.unsupported("while-else", self.span()));
        }
        Ok(Stmt::new(StmtKind::While { test, body }, span))
    }

    fn namedexpr_test(&mut self) -> Result<Expr, ParseError> {
        let e = self.test()?;
        if self.is_op(":=") {
            return Err(self.unsupported("assignment expression", self.span()));
        }
        Ok(e)
    }

    /// `for` / comprehension target list, parsed at bitwise-or level so the
    /// following `in` is not swallowed as a comparison.
    fn target_list(&mut self) -> Result<Target, ParseError> {
        let span = self.span();
        let first = self.bitor()?;
        if !self.is_op(",") {
            return self.to_target(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.is_kw("in") {
                break;
            }
            items.push(self.bitor()?);
        }
        self.to_target(Expr::new(ExprKind::Tuple(items), span))
    }

    // ----- expressions ------------------------------------------------------

    /// Comma-separated tests; more than one (or a trailing comma) yields a
    /// tuple.
    pub(crate) fn testlist(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        if self.is_op("*") {
            return Err(self.unsupported("starred expression", span));
        }
        let first = self.test()?;
        if !self.is_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_stmt_end() || self.is_op("=") || self.is_op(")") || self.is_op(":") {
                break;
            }
            if self.is_op("*") {
                return Err(self.unsupported("starred expression", self.span()));
            }
            items.push(self.test()?);
        }
        Ok(Expr::new(ExprKind::Tuple(items), span))
    }

    pub(crate) fn test(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        if self.is_kw("lambda") {
            self.advance();
            let params = self.params(":")?;
            self.expect_op(":")?;
            let body = self.test()?;
            return Ok(Expr::new(ExprKind::Lambda(Arc::new(Lambda { params, body })), span));
        }
        if self.is_kw("yield") || self.is_kw("await") {
            let kw = if self.is_kw("yield") { "yield" } else { "await" };
            return Err(self.unsupported(kw, span));
        }
        let body = self.or_test()?;
        if self.eat_kw("if") {
            let test = self.or_test()?;
            self.expect_kw("else")?;
            let orelse = self.test()?;
            return Ok(Expr::new(
                ExprKind::Conditional {
                    test: Box::new(test),
                    body: Box::new(body),
                    orelse: Box::new(orelse),
                },
                span,
            ));
        }
        Ok(body)
    }

    /// Condition-free test used in comprehension `if` clauses.
    fn test_nocond(&mut self) -> Result<Expr, ParseError> {
        if self.is_kw("lambda") {
            return Err(self.unsupported("lambda in comprehension condition", self.span()));
        }
        self.or_test()
    }

    fn or_test(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        let first = self.and_test()?;
        if !self.is_kw("or") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("or") {
            values.push(self.and_test()?);
        }
        Ok(Expr::new(ExprKind::BoolOp { op: BoolOp::Or, values }, span))
    }

    fn and_test(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        let first = self.not_test()?;
        if !self.is_kw("and") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("and") {
            values.push(self.not_test()?);
        }
        Ok(Expr::new(ExprKind::BoolOp { op: BoolOp::And, values }, span))
    }

    fn not_test(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        if self.eat_kw("not") {
            let operand = self.not_test()?;
            return Ok(Expr::new(ExprKind::UnaryOp { op: UnaryOp::Not, operand: Box::new(operand) }, span));
        }
        self.comparison()
    }

    fn comp_op(&mut self) -> Option<CmpOp> {
        let op = match self.peek() {
            Tok::Op("==") => CmpOp::Eq,
            Tok::Op("!=") => CmpOp::NotEq,
            Tok::Op("<") => CmpOp::Lt,
            Tok::Op("<=") => CmpOp::LtE,
            Tok::Op(">") => CmpOp::Gt,
            Tok::Op(">=") => CmpOp::GtE,
            Tok::Name(n) if n == "in" => CmpOp::In,
            Tok::Name(n) if n == "not" && matches!(self.peek_at(1), Tok::Name(m) if m == "in") => {
                self.advance();
                CmpOp::NotIn
            }
            Tok::Name(n) if n == "is" => {
                if matches!(self.peek_at(1), Tok::Name(m) if m == "not") {
                    self.advance();
                    CmpOp::IsNot
                } else {
                    CmpOp::Is
                }
            }
            _ => return None,
        };
        self.advance();
        Some(op)
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        let left = self.bitor()?;
        let mut ops = Vec::new();
        while let Some(op) = self.comp_op() {
            ops.push((op, self.bitor()?));
        }
        if ops.is_empty() {
            return Ok(left);
        }
        Ok(Expr::new(ExprKind::Compare { left: Box::new(left), ops }, span))
    }

    fn binary_level(
        &mut self,
        ops: &[(&str, BinOp)],
        next: fn(&mut Self) -> Result<Expr, ParseError>,
    ) -> Result<Expr, ParseError> {
        let span = self.span();
        let mut left = next(self)?;
        'outer: loop {
            for (sym, op) in ops {
                if self.is_op(sym) {
                    self.advance();
                    let right = next(self)?;
                    left = Expr::new(
                        ExprKind::BinOp { op: *op, left: Box::new(left), right: Box::new(right) },
                        span,
                    );
                    continue 'outer;
                }
            }
            break;
        }
        Ok(left)
    }

    fn bitor(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&[("|", BinOp::BitOr)], Self::bitxor)
    }

    fn bitxor(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&[("^", BinOp::BitXor)], Self::bitand)
    }

    fn bitand(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&[("&", BinOp::BitAnd)], Self::shift)
    }

    fn shift(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&[("<<", BinOp::LShift), (">>", BinOp::RShift)], Self::arith)
    }

    fn arith(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&[("+", BinOp::Add), ("-", BinOp::Sub)], Self::term)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        if self.is_op("@") {
            return Err(self.unsupported("matrix multiplication", self.span()));
        }
        let e = self.binary_level(
            &[
                ("*", BinOp::Mul),
                ("//", BinOp::FloorDiv),
                ("/", BinOp::Div),
                ("%", BinOp::Mod),
            ],
            Self::factor,
        )?;
        if self.is_op("@") {
            return Err(self.unsupported("matrix multiplication", self.span()));
        }
        Ok(e)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        let op = match self.peek() {
            Tok::Op("-") => Some(UnaryOp::Neg),
            Tok::Op("+") => Some(UnaryOp::Pos),
            Tok::Op("~") => Some(UnaryOp::Invert),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let operand = self.factor()?;
            return Ok(Expr::new(ExprKind::UnaryOp { op, operand: Box::new(operand) }, span));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        if self.is_kw("await") {
            return Err(self.unsupported("await", span));
        }
        let base = self.primary()?;
        if self.eat_op("**") {
            let exp = self.factor()?;
            return Ok(Expr::new(
                ExprKind::BinOp { op: BinOp::Pow, left: Box::new(base), right: Box::new(exp) },
                span,
            ));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.atom()?;
        loop {
            let span = e.span;
            if self.eat_op("(") {
                let args = self.call_args()?;
                self.expect_op(")")?;
                e = Expr::new(ExprKind::Call { func: Box::new(e), args }, span);
            } else if self.eat_op("[") {
                let index = self.subscript()?;
                self.expect_op("]")?;
                e = Expr::new(ExprKind::Subscript { value: Box::new(e), index: Box::new(index) }, span);
            } else if self.eat_op(".") {
                let attr = self.expect_name()?;
                e = Expr::new(ExprKind::Attribute { value: Box::new(e), attr }, span);
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn call_args(&mut self) -> Result<Vec<Arg>, ParseError> {
        let mut args = Vec::new();
        while !self.is_op(")") {
            let span = self.span();
            if self.is_op("*") || self.is_op("**") {
                return Err(self.unsupported("argument unpacking", span));
            }
            if let (Tok::Name(n), Tok::Op("=")) = (self.peek().clone(), self.peek_at(1).clone()) {
                if !is_keyword(&n) {
                    self.advance();
                    self.advance();
                    args.push(Arg::Keyword(n, self.test()?));
                    if !self.eat_op(",") {
                        break;
                    }
                    continue;
                }
            }
            if args.iter().any(|a| matches!(a, Arg::Keyword(..))) {
                return Err(ParseError::Syntax {
                    span: span.clamp_to(self.src),
                    expected: vec!["keyword argument".into()],
                    found: "positional argument after keyword argument".into(),
                });
            }
            let value = self.test()?;
            if self.is_kw("for") {
                let generators = self.comp_for()?;
                args.push(Arg::Positional(Expr::new(
                    ExprKind::Comprehension {
                        kind: CompKind::Generator,
                        element: CompElement::Single(Box::new(value)),
                        generators,
                    },
                    span,
                )));
            } else {
                args.push(Arg::Positional(value));
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(args)
    }

    fn subscript(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        let first = self.slice_item()?;
        if !self.is_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.is_op("]") {
                break;
            }
            items.push(self.slice_item()?);
        }
        Ok(Expr::new(ExprKind::Tuple(items), span))
    }

    fn slice_item(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        let lower = if self.is_op(":") { None } else { Some(self.test()?) };
        if !self.eat_op(":") {
            return lower.ok_or_else(|| self.unexpected(&["expression"]));
        }
        let bound = |p: &mut Self| -> Result<Option<Box<Expr>>, ParseError> {
            if p.is_op(":") || p.is_op("]") || p.is_op(",") {
                Ok(None)
            } else {
                Ok(Some(Box::new(p.test()?)))
            }
        };
        let upper = bound(self)?;
        let step = if self.eat_op(":") { bound(self)? } else { None };
        Ok(Expr::new(ExprKind::Slice { lower: lower.map(Box::new), upper, step }, span))
    }

    fn comp_for(&mut self) -> Result<Vec<CompFor>, ParseError> {
        let mut gens = Vec::new();
        while self.is_kw("for") || self.is_kw("async") {
            if self.is_kw("async") {
                return Err(self.unsupported("async", self.span()));
            }
            self.advance();
            let target = self.target_list()?;
            self.expect_kw("in")?;
            let iter = self.or_test()?;
            let mut ifs = Vec::new();
            while self.eat_kw("if") {
                ifs.push(self.test_nocond()?);
            }
            gens.push(CompFor { target, iter, ifs });
        }
        Ok(gens)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Op("(") => {
                self.advance();
                if self.eat_op(")") {
                    return Ok(Expr::new(ExprKind::Tuple(Vec::new()), span));
                }
                if self.is_kw("yield") {
                    return Err(self.unsupported("yield", self.span()));
                }
                if self.is_op("*") {
                    return Err(self.unsupported("starred expression", self.span()));
                }
                let first = self.test()?;
                if self.is_op(":=") {
                    return Err(self.unsupported("assignment expression", self.span()));
                }
                if self.is_kw("for") {
                    let generators = self.comp_for()?;
                    self.expect_op(")")?;
                    return Ok(Expr::new(
                        ExprKind::Comprehension {
                            kind: CompKind::Generator,
                            element: CompElement::Single(Box::new(first)),
                            generators,
                        },
                        span,
                    ));
                }
                if self.eat_op(")") {
                    return Ok(first);
                }
                let mut items = vec![first];
                while self.eat_op(",") {
                    if self.is_op(")") {
                        break;
                    }
                    items.push(self.test()?);
                }
                self.expect_op(")")?;
                Ok(Expr::new(ExprKind::Tuple(items), span))
            }
            Tok::Op("[") => {
                self.advance();
                if self.eat_op("]") {
                    return Ok(Expr::new(ExprKind::List(Vec::new()), span));
                }
                if self.is_op("*") {
                    return Err(self.unsupported("starred expression", self.span()));
                }
                let first = self.test()?;
                if self.is_kw("for") {
                    let generators = self.comp_for()?;
                    self.expect_op("]")?;
                    return Ok(Expr::new(
                        ExprKind::Comprehension {
                            kind: CompKind::List,
                            element: CompElement::Single(Box::new(first)),
                            generators,
                        },
                        span,
                    ));
                }
                let mut items = vec![first];
                while self.eat_op(",") {
                    if self.is_op("]") {
                        break;
                    }
                    items.push(self.test()?);
                }
                self.expect_op("]")?;
                Ok(Expr::new(ExprKind::List(items), span))
            }
            Tok::Op("{") => {
                self.advance();
                self.brace_atom(span)
            }
            Tok::Name(n) => {
                match n.as_str() {
                    "True" => {
                        self.advance();
                        return Ok(Expr::new(ExprKind::Constant(Constant::Bool(true)), span));
                    }
                    "False" => {
                        self.advance();
                        return Ok(Expr::new(ExprKind::Constant(Constant::Bool(false)), span));
                    }
                    "None" => {
                        self.advance();
                        return Ok(Expr::new(ExprKind::Constant(Constant::None), span));
                    }
                    "yield" | "await" => return Err(self.unsupported(&n, span)),
                    _ => {}
                }
                if is_keyword(&n) {
                    return Err(self.unexpected(&["expression"]));
                }
                self.advance();
                Ok(Expr::new(ExprKind::Name(n), span))
            }
            Tok::Int(i) => {
                self.advance();
                Ok(Expr::new(ExprKind::Constant(Constant::Int(i)), span))
            }
            Tok::Float(f) => {
                self.advance();
                Ok(Expr::new(ExprKind::Constant(Constant::Float(f)), span))
            }
            Tok::Str(_) | Tok::FStr(_) => self.strings(),
            Tok::BytesStr => Err(self.unsupported("bytes literal", span)),
            Tok::Op("...") => Err(self.unsupported("Ellipsis", span)),
            _ => Err(self.unexpected(&["expression"])),
        }
    }

    fn brace_atom(&mut self, span: Span) -> Result<Expr, ParseError> {
        if self.eat_op("}") {
            return Ok(Expr::new(ExprKind::Map(Vec::new()), span));
        }
        if self.is_op("*") {
            return Err(self.unsupported("starred expression", self.span()));
        }
        // map display starting with a spread
        let first_entry = if self.eat_op("**") {
            MapEntry::Spread(self.bitor()?)
        } else {
            let first = self.test()?;
            if !self.eat_op(":") {
                // set display or comprehension
                if self.is_kw("for") {
                    let generators = self.comp_for()?;
                    self.expect_op("}")?;
                    return Ok(Expr::new(
                        ExprKind::Comprehension {
                            kind: CompKind::Set,
                            element: CompElement::Single(Box::new(first)),
                            generators,
                        },
                        span,
                    ));
                }
                let mut items = vec![first];
                while self.eat_op(",") {
                    if self.is_op("}") {
                        break;
                    }
                    items.push(self.test()?);
                }
                self.expect_op("}")?;
                return Ok(Expr::new(ExprKind::Set(items), span));
            }
            let value = self.test()?;
            if self.is_kw("for") {
                let generators = self.comp_for()?;
                self.expect_op("}")?;
                return Ok(Expr::new(
                    ExprKind::Comprehension {
                        kind: CompKind::Map,
                        element: CompElement::Pair(Box::new(first), Box::new(value)),
                        generators,
                    },
                    span,
                ));
            }
            MapEntry::Pair(first, value)
        };
        let mut entries = vec![first_entry];
        while self.eat_op(",") {
            if self.is_op("}") {
                break;
            }
            if self.eat_op("**") {
                entries.push(MapEntry::Spread(self.bitor()?));
            } else {
                let k = self.test()?;
                self.expect_op(":")?;
                let v = self.test()?;
                entries.push(MapEntry::Pair(k, v));
            }
        }
        self.expect_op("}")?;
        Ok(Expr::new(ExprKind::Map(entries), span))
    }

    /// Adjacent string literals concatenate; any f-string part turns the
    /// whole run into an f-string.
    fn strings(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        let mut parts: Vec<FStringPart> = Vec::new();
        let mut any_f = false;
        loop {
            match self.peek().clone() {
                Tok::Str(s) => {
                    self.advance();
                    push_literal(&mut parts, &s);
                }
                Tok::FStr(body) => {
                    let fspan = self.span();
                    self.advance();
                    any_f = true;
                    for p in parse_fstring_body(&body, fspan, self.src)? {
                        match p {
                            FStringPart::Literal(s) => push_literal(&mut parts, &s),
                            field => parts.push(field),
                        }
                    }
                }
                Tok::BytesStr => return Err(self.unsupported("bytes literal", self.span())),
                _ => break,
            }
        }
        if !any_f {
            let s = match parts.pop() {
                Some(FStringPart::Literal(s)) => s,
                _ => String::new(),
            };
            return Ok(Expr::new(ExprKind::Constant(Constant::Str(s)), span));
        }
        Ok(Expr::new(ExprKind::FString(parts), span))
    }
}

fn push_literal(parts: &mut Vec<FStringPart>, s: &str) {
    if let Some(FStringPart::Literal(prev)) = parts.last_mut() {
        prev.push_str(s);
    } else {
        parts.push(FStringPart::Literal(s.to_string()));
    }
}

fn parse_fstring_body(body: &str, span: Span, src: &str) -> Result<Vec<FStringPart>, ParseError> {
    let chars: Vec<char> = body.chars().collect();
    let mut parts = Vec::new();
    let mut lit = String::new();
    let mut i = 0;
    let bad = |msg: &str| ParseError::Syntax {
        span: span.clamp_to(src),
        expected: vec![msg.to_string()],
        found: "malformed f-string".into(),
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '{' && chars.get(i + 1) == Some(&'{') {
            lit.push('{');
            i += 2;
            continue;
        }
        if c == '}' && chars.get(i + 1) == Some(&'}') {
            lit.push('}');
            i += 2;
            continue;
        }
        if c == '}' {
            return Err(bad("'}' to be doubled"));
        }
        if c != '{' {
            lit.push(c);
            i += 1;
            continue;
        }
        // replacement field
        if !lit.is_empty() {
            parts.push(FStringPart::Literal(std::mem::take(&mut lit)));
        }
        i += 1;
        let start = i;
        let mut depth = 0i32;
        let mut conv_at = None;
        let mut spec_at = None;
        let mut quote: Option<char> = None;
        while i < chars.len() {
            let ch = chars[i];
            if let Some(q) = quote {
                if ch == '\\' {
                    i += 1;
                } else if ch == q {
                    quote = None;
                }
                i += 1;
                continue;
            }
            match ch {
                '\'' | '"' => quote = Some(ch),
                '(' | '[' | '{' => depth += 1,
                ')' | ']' => depth -= 1,
                '}' if depth > 0 => depth -= 1,
                '}' => break,
                '!' if depth == 0 && chars.get(i + 1) != Some(&'=') && conv_at.is_none() && spec_at.is_none() => {
                    conv_at = Some(i)
                }
                ':' if depth == 0 && spec_at.is_none() => spec_at = Some(i),
                '=' if depth == 0
                    && spec_at.is_none()
                    && chars.get(i + 1) != Some(&'=')
                    && i > start
                    && !matches!(chars[i - 1], '=' | '!' | '<' | '>') =>
                {
                    return Err(ParseError::Unsupported {
                        construct: "self-documenting f-string field".into(),
                        span: span.clamp_to(src),
                    })
                }
                _ => {}
            }
            i += 1;
        }
        if i >= chars.len() {
            return Err(bad("'}' closing the replacement field"));
        }
        let end = i;
        i += 1;
        let expr_end = conv_at.or(spec_at).unwrap_or(end);
        let expr_text: String = chars[start..expr_end].iter().collect();
        let conversion = match conv_at {
            Some(ci) => {
                let conv_end = spec_at.unwrap_or(end);
                let conv: String = chars[ci + 1..conv_end].iter().collect();
                match conv.as_str() {
                    "r" => Some(Conversion::Repr),
                    "s" => Some(Conversion::Str),
                    _ => return Err(bad("conversion 'r' or 's'")),
                }
            }
            None => None,
        };
        let format_spec = spec_at.map(|si| chars[si + 1..end].iter().collect::<String>());
        if format_spec.as_deref().is_some_and(|s| s.contains('{')) {
            return Err(ParseError::Unsupported {
                construct: "nested f-string format spec".into(),
                span: span.clamp_to(src),
            });
        }
        if expr_text.trim().is_empty() {
            return Err(bad("expression in replacement field"));
        }
        let expr = parse_expression_text(expr_text.trim(), Some(span.clamp_to(src)))?;
        parts.push(FStringPart::Field { expr: Box::new(expr), conversion, format_spec });
    }
    if !lit.is_empty() {
        parts.push(FStringPart::Literal(lit));
    }
    Ok(parts)
}
