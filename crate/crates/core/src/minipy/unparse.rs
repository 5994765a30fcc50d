//! AST back to canonical source text.
//!
//! Output uses four-space indentation, one blank line around top-level
//! functions and the minimum parentheses that preserve the tree.

use super::ast::*;
use super::lexer::ENTRY_MARKER;
use crate::value::{float_repr, repr_str};

// Binding strength, loosest first.
const P_TUPLE: u8 = 0;
const P_LAMBDA: u8 = 1;
const P_TEST: u8 = 2;
const P_OR: u8 = 3;
const P_AND: u8 = 4;
const P_NOT: u8 = 5;
const P_CMP: u8 = 6;
const P_BOR: u8 = 7;
const P_BXOR: u8 = 8;
const P_BAND: u8 = 9;
const P_SHIFT: u8 = 10;
const P_ARITH: u8 = 11;
const P_TERM: u8 = 12;
const P_UNARY: u8 = 13;
const P_POW: u8 = 14;
const P_ATOM: u8 = 15;

pub fn unparse(module: &Module) -> String {
    let mut out = String::new();
    for (i, s) in module.body.iter().enumerate() {
        if i > 0 {
            let prev_def = matches!(module.body[i - 1].kind, StmtKind::FunctionDef(_));
            let this_def = matches!(s.kind, StmtKind::FunctionDef(_));
            if prev_def || this_def {
                out.push('\n');
            }
        }
        stmt(&mut out, s, 0);
    }
    out
}

/// Renders a single expression at statement level (bare tuples allowed).
pub fn unparse_expr(e: &Expr) -> String {
    expr(e, P_TUPLE)
}

pub fn unparse_stmts(body: &[Stmt], indent: usize) -> String {
    let mut out = String::new();
    block(&mut out, body, indent);
    out
}

fn pad(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push_str("    ");
    }
}

fn block(out: &mut String, body: &[Stmt], indent: usize) {
    if body.is_empty() {
        pad(out, indent);
        out.push_str("pass\n");
    }
    for s in body {
        stmt(out, s, indent);
    }
}

fn stmt(out: &mut String, s: &Stmt, indent: usize) {
    pad(out, indent);
    match &s.kind {
        StmtKind::FunctionDef(d) => {
            out.push_str("def ");
            out.push_str(&d.name);
            out.push('(');
            out.push_str(&params(&d.params));
            out.push_str("):");
            if d.entry_marker {
                out.push_str(" # ");
                out.push_str(ENTRY_MARKER);
            }
            out.push('\n');
            if let Some(doc) = &d.docstring {
                pad(out, indent + 1);
                out.push_str(&docstring(doc));
                out.push('\n');
            }
            block(out, &d.body, indent + 1);
        }
        StmtKind::Assign { target: t, value } => {
            out.push_str(&target(t, true));
            out.push_str(" = ");
            out.push_str(&expr(value, P_TUPLE));
            out.push('\n');
        }
        StmtKind::TupleAssign { targets, value } => {
            out.push_str(&target(&Target::Tuple(targets.clone()), true));
            out.push_str(" = ");
            out.push_str(&expr(value, P_TUPLE));
            out.push('\n');
        }
        StmtKind::AugAssign { target: t, op, value } => {
            out.push_str(&target(t, true));
            out.push(' ');
            out.push_str(op.symbol());
            out.push_str("= ");
            out.push_str(&expr(value, P_TUPLE));
            out.push('\n');
        }
        StmtKind::Return(v) => {
            out.push_str("return");
            if let Some(v) = v {
                out.push(' ');
                out.push_str(&expr(v, P_TUPLE));
            }
            out.push('\n');
        }
        StmtKind::Expr(e) => {
            out.push_str(&expr(e, P_TUPLE));
            out.push('\n');
        }
        StmtKind::If { .. } => if_chain(out, s, indent, "if"),
        StmtKind::For { target: t, iter, body } => {
            out.push_str("for ");
            out.push_str(&target(t, true));
            out.push_str(" in ");
            out.push_str(&expr(iter, P_TUPLE));
            out.push_str(":\n");
            block(out, body, indent + 1);
        }
        StmtKind::While { test, body } => {
            out.push_str("while ");
            out.push_str(&expr(test, P_TEST));
            out.push_str(":\n");
            block(out, body, indent + 1);
        }
        StmtKind::Break => out.push_str("break\n"),
        StmtKind::Continue => out.push_str("continue\n"),
        StmtKind::Pass => out.push_str("pass\n"),
        StmtKind::Raise(v) => {
            out.push_str("raise");
            if let Some(v) = v {
                out.push(' ');
                out.push_str(&expr(v, P_TEST));
            }
            out.push('\n');
        }
    }
}

fn if_chain(out: &mut String, s: &Stmt, indent: usize, kw: &str) {
    let StmtKind::If { test, body, orelse } = &s.kind else {
        unreachable!()
    };
    out.push_str(kw);
    out.push(' ');
    out.push_str(&expr(test, P_TEST));
    out.push_str(":\n");
    block(out, body, indent + 1);
    if orelse.is_empty() {
        return;
    }
    pad(out, indent);
    if let [only] = orelse.as_slice() {
        if matches!(only.kind, StmtKind::If { .. }) {
            if_chain(out, only, indent, "elif");
            return;
        }
    }
    out.push_str("else:\n");
    block(out, orelse, indent + 1);
}

fn docstring(doc: &str) -> String {
    let plain = !doc.contains("\"\"\"")
        && !doc.ends_with('"')
        && !doc.contains('\\')
        && doc.chars().all(|c| c == '\n' || !c.is_control());
    if plain {
        format!("\"\"\"{doc}\"\"\"")
    } else {
        repr_str(doc)
    }
}

fn params(ps: &[Param]) -> String {
    ps.iter()
        .map(|p| match &p.default {
            Some(d) => format!("{}={}", p.name, expr(d, P_TEST)),
            None => p.name.clone(),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn target(t: &Target, top: bool) -> String {
    match t {
        Target::Name(n) => n.clone(),
        Target::Subscript { value, index } => {
            format!("{}[{}]", expr(value, P_ATOM), subscript_index(index))
        }
        Target::Tuple(items) => {
            let parts: Vec<String> = items.iter().map(|i| target(i, false)).collect();
            match (parts.len(), top) {
                (0, _) => "()".to_string(),
                (1, _) => format!("({},)", parts[0]),
                (_, true) => parts.join(", "),
                (_, false) => format!("({})", parts.join(", ")),
            }
        }
    }
}

fn subscript_index(index: &Expr) -> String {
    match &index.kind {
        ExprKind::Tuple(items) if items.len() >= 2 => items
            .iter()
            .map(slice_item)
            .collect::<Vec<_>>()
            .join(", "),
        _ => slice_item(index),
    }
}

fn slice_item(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Slice { lower, upper, step } => {
            let b = |x: &Option<Box<Expr>>| x.as_ref().map(|x| expr(x, P_TEST)).unwrap_or_default();
            let mut s = format!("{}:{}", b(lower), b(upper));
            if step.is_some() {
                s.push(':');
                s.push_str(&b(step));
            }
            s
        }
        _ => expr(e, P_TEST),
    }
}

fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Lambda(_) => P_LAMBDA,
        ExprKind::Conditional { .. } => P_TEST,
        ExprKind::BoolOp { op: BoolOp::Or, .. } => P_OR,
        ExprKind::BoolOp { op: BoolOp::And, .. } => P_AND,
        ExprKind::UnaryOp { op: UnaryOp::Not, .. } => P_NOT,
        ExprKind::Compare { .. } => P_CMP,
        ExprKind::BinOp { op, .. } => binop_prec(*op),
        ExprKind::UnaryOp { .. } => P_UNARY,
        ExprKind::Tuple(items) if items.len() >= 2 => P_TUPLE,
        ExprKind::Constant(Constant::Int(i)) if i.sign() == num_bigint::Sign::Minus => P_UNARY,
        ExprKind::Constant(Constant::Float(f)) if f.is_sign_negative() => P_UNARY,
        _ => P_ATOM,
    }
}

fn binop_prec(op: BinOp) -> u8 {
    match op {
        BinOp::BitOr => P_BOR,
        BinOp::BitXor => P_BXOR,
        BinOp::BitAnd => P_BAND,
        BinOp::LShift | BinOp::RShift => P_SHIFT,
        BinOp::Add | BinOp::Sub => P_ARITH,
        BinOp::Mul | BinOp::Div | BinOp::FloorDiv | BinOp::Mod => P_TERM,
        BinOp::Pow => P_POW,
    }
}

fn expr(e: &Expr, min: u8) -> String {
    let s = expr_inner(e);
    if precedence(e) < min {
        format!("({s})")
    } else {
        s
    }
}

fn join(items: &[Expr], min: u8) -> String {
    items.iter().map(|i| expr(i, min)).collect::<Vec<_>>().join(", ")
}

fn constant(c: &Constant) -> String {
    match c {
        Constant::None => "None".into(),
        Constant::Bool(true) => "True".into(),
        Constant::Bool(false) => "False".into(),
        Constant::Int(i) => i.to_string(),
        Constant::Float(f) if f.is_infinite() => {
            if *f > 0.0 { "1e309".into() } else { "-1e309".into() }
        }
        Constant::Float(f) => float_repr(*f),
        Constant::Str(s) => repr_str(s),
    }
}

fn comp_tail(gens: &[CompFor]) -> String {
    let mut s = String::new();
    for g in gens {
        s.push_str(" for ");
        s.push_str(&target(&g.target, true));
        s.push_str(" in ");
        s.push_str(&expr(&g.iter, P_OR));
        for cond in &g.ifs {
            s.push_str(" if ");
            s.push_str(&expr(cond, P_OR));
        }
    }
    s
}

fn comprehension_body(element: &CompElement, gens: &[CompFor]) -> String {
    let head = match element {
        CompElement::Single(e) => expr(e, P_TEST),
        CompElement::Pair(k, v) => format!("{}: {}", expr(k, P_TEST), expr(v, P_TEST)),
    };
    format!("{head}{}", comp_tail(gens))
}

fn call_args(args: &[Arg]) -> String {
    if let [Arg::Positional(e)] = args {
        if let ExprKind::Comprehension { kind: CompKind::Generator, element, generators } = &e.kind {
            return comprehension_body(element, generators);
        }
    }
    args.iter()
        .map(|a| match a {
            Arg::Positional(e) => expr(e, P_TEST),
            Arg::Keyword(k, e) => format!("{k}={}", expr(e, P_TEST)),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn expr_inner(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Name(n) => n.clone(),
        ExprKind::Constant(c) => constant(c),
        ExprKind::BinOp { op: BinOp::Pow, left, right } => {
            format!("{} ** {}", expr(left, P_ATOM), expr(right, P_UNARY))
        }
        ExprKind::BinOp { op, left, right } => {
            let p = binop_prec(*op);
            format!("{} {} {}", expr(left, p), op.symbol(), expr(right, p + 1))
        }
        ExprKind::UnaryOp { op, operand } => match op {
            UnaryOp::Not => format!("not {}", expr(operand, P_NOT)),
            UnaryOp::Neg => format!("-{}", expr(operand, P_UNARY)),
            UnaryOp::Pos => format!("+{}", expr(operand, P_UNARY)),
            UnaryOp::Invert => format!("~{}", expr(operand, P_UNARY)),
        },
        ExprKind::BoolOp { op, values } => {
            let (kw, p) = match op {
                BoolOp::Or => (" or ", P_AND),
                BoolOp::And => (" and ", P_NOT),
            };
            values.iter().map(|v| expr(v, p)).collect::<Vec<_>>().join(kw)
        }
        ExprKind::Compare { left, ops } => {
            let mut s = expr(left, P_BOR);
            for (op, right) in ops {
                s.push(' ');
                s.push_str(op.symbol());
                s.push(' ');
                s.push_str(&expr(right, P_BOR));
            }
            s
        }
        ExprKind::Call { func, args } => format!("{}({})", primary(func), call_args(args)),
        ExprKind::Attribute { value, attr } => format!("{}.{attr}", primary(value)),
        ExprKind::Subscript { value, index } => {
            format!("{}[{}]", primary(value), subscript_index(index))
        }
        ExprKind::Slice { .. } => slice_item(e),
        ExprKind::Conditional { test, body, orelse } => format!(
            "{} if {} else {}",
            expr(body, P_OR),
            expr(test, P_OR),
            expr(orelse, P_TEST)
        ),
        ExprKind::Lambda(l) => {
            if l.params.is_empty() {
                format!("lambda: {}", expr(&l.body, P_TEST))
            } else {
                format!("lambda {}: {}", params(&l.params), expr(&l.body, P_TEST))
            }
        }
        ExprKind::List(items) => format!("[{}]", join(items, P_TEST)),
        ExprKind::Tuple(items) => match items.len() {
            0 => "()".into(),
            1 => format!("({},)", expr(&items[0], P_TEST)),
            _ => join(items, P_TEST),
        },
        ExprKind::Set(items) => format!("{{{}}}", join(items, P_TEST)),
        ExprKind::Map(entries) => {
            let parts: Vec<String> = entries
                .iter()
                .map(|en| match en {
                    MapEntry::Pair(k, v) => format!("{}: {}", expr(k, P_TEST), expr(v, P_TEST)),
                    MapEntry::Spread(x) => format!("**{}", expr(x, P_BOR)),
                })
                .collect();
            format!("{{{}}}", parts.join(", "))
        }
        ExprKind::Comprehension { kind, element, generators } => {
            let body = comprehension_body(element, generators);
            match kind {
                CompKind::List => format!("[{body}]"),
                CompKind::Set | CompKind::Map => format!("{{{body}}}"),
                CompKind::Generator => format!("({body})"),
            }
        }
        ExprKind::FString(parts) => fstring(parts),
    }
}

/// Operand of a call, attribute or subscript; integer literals need
/// parentheses so `.` is not read as a decimal point.
fn primary(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Constant(Constant::Int(_)) | ExprKind::Constant(Constant::Float(_)) => {
            format!("({})", expr_inner(e))
        }
        _ => expr(e, P_ATOM),
    }
}

fn fstring(parts: &[FStringPart]) -> String {
    let fields: Vec<String> = parts
        .iter()
        .filter_map(|p| match p {
            FStringPart::Field { expr: e, .. } => {
                let s = expr(e, P_TEST);
                Some(if s.starts_with('{') { format!(" {s}") } else { s })
            }
            FStringPart::Literal(_) => None,
        })
        .collect();
    let quote = if fields.iter().any(|f| f.contains('"')) { '\'' } else { '"' };
    let mut out = String::from("f");
    out.push(quote);
    let mut fi = 0;
    for p in parts {
        match p {
            FStringPart::Literal(s) => {
                for c in s.chars() {
                    match c {
                        '{' => out.push_str("{{"),
                        '}' => out.push_str("}}"),
                        '\\' => out.push_str("\\\\"),
                        '\n' => out.push_str("\\n"),
                        '\r' => out.push_str("\\r"),
                        '\t' => out.push_str("\\t"),
                        c if c == quote => {
                            out.push('\\');
                            out.push(c);
                        }
                        c if c.is_control() => out.push_str(&format!("\\x{:02x}", c as u32)),
                        c => out.push(c),
                    }
                }
            }
            FStringPart::Field { conversion, format_spec, .. } => {
                out.push('{');
                out.push_str(&fields[fi]);
                fi += 1;
                match conversion {
                    Some(Conversion::Repr) => out.push_str("!r"),
                    Some(Conversion::Str) => out.push_str("!s"),
                    None => {}
                }
                if let Some(spec) = format_spec {
                    out.push(':');
                    out.push_str(spec);
                }
                out.push('}');
            }
        }
    }
    out.push(quote);
    out
}

#[cfg(test)]
mod tests {
    use super::super::{parse_expr, parse_source};
    use super::*;

    fn roundtrip(src: &str) -> String {
        let m = parse_source(src).unwrap();
        let out = unparse(&m);
        let m2 = parse_source(&out).unwrap_or_else(|e| panic!("{e}\n{out}"));
        assert_eq!(m, m2, "{out}");
        assert_eq!(unparse(&m2), out);
        out
    }

    #[test]
    fn golden_program_is_stable() {
        let src = "def f(a, b):\n    y = a\n    for i in range(b):\n        y += y * i\n    return y\n\ndef main(): # << START_OF_TRACE\n    return f(1, 3)\n";
        assert_eq!(roundtrip(src), src);
    }

    #[test]
    fn minimal_parentheses() {
        for (src, want) in [
            ("(a + b) * c", "(a + b) * c"),
            ("a + (b * c)", "a + b * c"),
            ("a - (b - c)", "a - (b - c)"),
            ("(a - b) - c", "a - b - c"),
            ("(-2) ** 2", "(-2) ** 2"),
            ("2 ** -1", "2 ** -1"),
            ("not (a and b)", "not (a and b)"),
            ("(x for x in y)", "(x for x in y)"),
            ("f((x for x in y))", "f(x for x in y)"),
            ("f((x for x in y), 1)", "f((x for x in y), 1)"),
            ("(1).bit_length()", "(1).bit_length()"),
            ("(a if b else c) if d else e", "(a if b else c) if d else e"),
            ("x[1:2, ::3]", "x[1:2, ::3]"),
            ("(1,)", "(1,)"),
            ("lambda x, y=2: x + y", "lambda x, y=2: x + y"),
        ] {
            let e = parse_expr(src).unwrap();
            let out = unparse_expr(&e);
            assert_eq!(out, want);
            assert_eq!(parse_expr(&out).unwrap(), e);
        }
    }

    #[test]
    fn strings_and_fstrings() {
        roundtrip("def f(s):\n    \"\"\"Doc.\"\"\"\n    x = f\"c = {s!r} {{}} {s[0]:>3}\"\n    return x + 'it\\'s' + \"q\\n\"\n");
        let e = parse_expr("f'{d[\"k\"]}'").unwrap();
        assert_eq!(unparse_expr(&e), "f\"{d['k']}\"");
    }

    #[test]
    fn control_flow() {
        roundtrip("def g(x):\n    if x > 1:\n        return 1\n    elif x:\n        pass\n    else:\n        while x < 3:\n            x += 1\n            if x == 2:\n                break\n            continue\n    a, (b, c) = 1, (2, 3)\n    d[0] = {k: v for k, v in e.items() if v}\n    raise ValueError('bad')\n");
    }
}
