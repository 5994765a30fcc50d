//! Abstract syntax tree for MiniPy.
//!
//! Spans are carried on statements and expressions but are ignored by
//! [`PartialEq`], so `parse(unparse(parse(p))) == parse(p)` compares structure
//! only.

use std::sync::Arc;

use num_bigint::BigInt;

use super::Span;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Module {
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Stmt {
    pub fn new(kind: StmtKind, span: Span) -> Self {
        Stmt { kind, span }
    }

    pub fn line(&self) -> usize {
        self.span.line
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    FunctionDef(Arc<FunctionDef>),
    Assign { target: Target, value: Expr },
    /// `a, b = b, a`: the right-hand side is evaluated completely before
    /// any target is bound.
    TupleAssign { targets: Vec<Target>, value: Expr },
    AugAssign { target: Target, op: BinOp, value: Expr },
    Return(Option<Expr>),
    Expr(Expr),
    If { test: Expr, body: Vec<Stmt>, orelse: Vec<Stmt> },
    For { target: Target, iter: Expr, body: Vec<Stmt> },
    While { test: Expr, body: Vec<Stmt> },
    Break,
    Continue,
    Pass,
    Raise(Option<Expr>),
}

impl StmtKind {
    /// Simultaneous assignment semantics: true for tuple assignment.
    pub fn is_simultaneous(&self) -> bool {
        matches!(self, StmtKind::TupleAssign { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<Param>,
    pub docstring: Option<String>,
    pub body: Vec<Stmt>,
    /// The `def` line carries the `# << START_OF_TRACE` comment.
    pub entry_marker: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub default: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lambda {
    pub params: Vec<Param>,
    pub body: Expr,
}

/// Assignment target.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Name(String),
    Subscript { value: Box<Expr>, index: Box<Expr> },
    Tuple(Vec<Target>),
}

impl Target {
    /// Names bound by this target, in order.
    pub fn bound_names(&self, out: &mut Vec<String>) {
        match self {
            Target::Name(n) => out.push(n.clone()),
            Target::Subscript { .. } => {}
            Target::Tuple(ts) => ts.iter().for_each(|t| t.bound_names(out)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    /// Expression with a default span, for synthesized nodes.
    pub fn synth(kind: ExprKind) -> Self {
        Expr { kind, span: Span::default() }
    }

    pub fn name(n: impl Into<String>) -> Self {
        Expr::synth(ExprKind::Name(n.into()))
    }

    pub fn constant(c: Constant) -> Self {
        Expr::synth(ExprKind::Constant(c))
    }

    pub fn int(v: i64) -> Self {
        Expr::constant(Constant::Int(BigInt::from(v)))
    }

    pub fn str(s: impl Into<String>) -> Self {
        Expr::constant(Constant::Str(s.into()))
    }

    pub fn call(func: Expr, args: Vec<Expr>) -> Self {
        Expr::synth(ExprKind::Call {
            func: Box::new(func),
            args: args.into_iter().map(Arg::Positional).collect(),
        })
    }

    pub fn method(receiver: Expr, name: &str, args: Vec<Expr>) -> Self {
        Expr::call(
            Expr::synth(ExprKind::Attribute { value: Box::new(receiver), attr: name.to_string() }),
            args,
        )
    }

    pub fn binop(op: BinOp, left: Expr, right: Expr) -> Self {
        Expr::synth(ExprKind::BinOp { op, left: Box::new(left), right: Box::new(right) })
    }

    pub fn compare(left: Expr, op: CmpOp, right: Expr) -> Self {
        Expr::synth(ExprKind::Compare { left: Box::new(left), ops: vec![(op, right)] })
    }

    pub fn subscript(value: Expr, index: Expr) -> Self {
        Expr::synth(ExprKind::Subscript { value: Box::new(value), index: Box::new(index) })
    }

    /// Name or constant.
    pub fn is_atomic(&self) -> bool {
        matches!(self.kind, ExprKind::Name(_) | ExprKind::Constant(_))
    }

    /// Number of AST nodes in this expression.
    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    /// Pre-order traversal over this expression and every nested one
    /// (including lambda bodies and comprehension parts).
    pub fn walk(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Name(_) | ExprKind::Constant(_) => {}
            ExprKind::BinOp { left, right, .. } => {
                left.walk(f);
                right.walk(f);
            }
            ExprKind::UnaryOp { operand, .. } => operand.walk(f),
            ExprKind::BoolOp { values, .. } => values.iter().for_each(|v| v.walk(f)),
            ExprKind::Compare { left, ops } => {
                left.walk(f);
                ops.iter().for_each(|(_, e)| e.walk(f));
            }
            ExprKind::Call { func, args } => {
                func.walk(f);
                for a in args {
                    a.value().walk(f);
                }
            }
            ExprKind::Attribute { value, .. } => value.walk(f),
            ExprKind::Subscript { value, index } => {
                value.walk(f);
                index.walk(f);
            }
            ExprKind::Slice { lower, upper, step } => {
                for e in [lower, upper, step].into_iter().flatten() {
                    e.walk(f);
                }
            }
            ExprKind::Conditional { test, body, orelse } => {
                body.walk(f);
                test.walk(f);
                orelse.walk(f);
            }
            ExprKind::Lambda(l) => {
                for p in &l.params {
                    if let Some(d) = &p.default {
                        d.walk(f);
                    }
                }
                l.body.walk(f);
            }
            ExprKind::List(items) | ExprKind::Tuple(items) | ExprKind::Set(items) => {
                items.iter().for_each(|e| e.walk(f))
            }
            ExprKind::Map(entries) => {
                for e in entries {
                    match e {
                        MapEntry::Pair(k, v) => {
                            k.walk(f);
                            v.walk(f);
                        }
                        MapEntry::Spread(v) => v.walk(f),
                    }
                }
            }
            ExprKind::Comprehension { element, generators, .. } => {
                match element {
                    CompElement::Single(e) => e.walk(f),
                    CompElement::Pair(k, v) => {
                        k.walk(f);
                        v.walk(f);
                    }
                }
                for g in generators {
                    g.iter.walk(f);
                    g.ifs.iter().for_each(|c| c.walk(f));
                }
            }
            ExprKind::FString(parts) => {
                for p in parts {
                    if let FStringPart::Field { expr, .. } = p {
                        expr.walk(f);
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constant {
    None,
    Bool(bool),
    Int(BigInt),
    Float(f64),
    Str(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    FloorDiv,
    Mod,
    Pow,
    BitAnd,
    BitOr,
    BitXor,
    LShift,
    RShift,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::FloorDiv => "//",
            BinOp::Mod => "%",
            BinOp::Pow => "**",
            BinOp::BitAnd => "&",
            BinOp::BitOr => "|",
            BinOp::BitXor => "^",
            BinOp::LShift => "<<",
            BinOp::RShift => ">>",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Pos,
    Not,
    Invert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoolOp {
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    NotEq,
    Lt,
    LtE,
    Gt,
    GtE,
    In,
    NotIn,
    Is,
    IsNot,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::NotEq => "!=",
            CmpOp::Lt => "<",
            CmpOp::LtE => "<=",
            CmpOp::Gt => ">",
            CmpOp::GtE => ">=",
            CmpOp::In => "in",
            CmpOp::NotIn => "not in",
            CmpOp::Is => "is",
            CmpOp::IsNot => "is not",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Positional(Expr),
    Keyword(String, Expr),
}

impl Arg {
    pub fn value(&self) -> &Expr {
        match self {
            Arg::Positional(e) | Arg::Keyword(_, e) => e,
        }
    }

    pub fn value_mut(&mut self) -> &mut Expr {
        match self {
            Arg::Positional(e) | Arg::Keyword(_, e) => e,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapEntry {
    Pair(Expr, Expr),
    /// `**mapping`
    Spread(Expr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompKind {
    List,
    Set,
    Map,
    Generator,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CompElement {
    Single(Box<Expr>),
    Pair(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompFor {
    pub target: Target,
    pub iter: Expr,
    pub ifs: Vec<Expr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conversion {
    Str,
    Repr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FStringPart {
    Literal(String),
    Field { expr: Box<Expr>, conversion: Option<Conversion>, format_spec: Option<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Name(String),
    Constant(Constant),
    BinOp { op: BinOp, left: Box<Expr>, right: Box<Expr> },
    UnaryOp { op: UnaryOp, operand: Box<Expr> },
    BoolOp { op: BoolOp, values: Vec<Expr> },
    Compare { left: Box<Expr>, ops: Vec<(CmpOp, Expr)> },
    Call { func: Box<Expr>, args: Vec<Arg> },
    Attribute { value: Box<Expr>, attr: String },
    Subscript { value: Box<Expr>, index: Box<Expr> },
    /// Only valid as the index of a subscript.
    Slice { lower: Option<Box<Expr>>, upper: Option<Box<Expr>>, step: Option<Box<Expr>> },
    Conditional { test: Box<Expr>, body: Box<Expr>, orelse: Box<Expr> },
    Lambda(Arc<Lambda>),
    List(Vec<Expr>),
    Tuple(Vec<Expr>),
    Set(Vec<Expr>),
    Map(Vec<MapEntry>),
    Comprehension { kind: CompKind, element: CompElement, generators: Vec<CompFor> },
    FString(Vec<FStringPart>),
}

/// Visits every statement (recursively, including nested function bodies).
pub fn walk_stmts(stmts: &[Stmt], f: &mut dyn FnMut(&Stmt)) {
    for s in stmts {
        f(s);
        match &s.kind {
            StmtKind::FunctionDef(def) => walk_stmts(&def.body, f),
            StmtKind::If { body, orelse, .. } => {
                walk_stmts(body, f);
                walk_stmts(orelse, f);
            }
            StmtKind::For { body, .. } | StmtKind::While { body, .. } => walk_stmts(body, f),
            _ => {}
        }
    }
}

/// Every expression directly owned by a statement (not descending into
/// nested statements).
pub fn stmt_exprs(s: &Stmt) -> Vec<&Expr> {
    fn target_exprs<'a>(t: &'a Target, out: &mut Vec<&'a Expr>) {
        match t {
            Target::Name(_) => {}
            Target::Subscript { value, index } => {
                out.push(value);
                out.push(index);
            }
            Target::Tuple(ts) => ts.iter().for_each(|t| target_exprs(t, out)),
        }
    }
    let mut out = Vec::new();
    match &s.kind {
        StmtKind::FunctionDef(def) => {
            for p in &def.params {
                if let Some(d) = &p.default {
                    out.push(d);
                }
            }
        }
        StmtKind::Assign { target, value } | StmtKind::AugAssign { target, value, .. } => {
            target_exprs(target, &mut out);
            out.push(value);
        }
        StmtKind::TupleAssign { targets, value } => {
            targets.iter().for_each(|t| target_exprs(t, &mut out));
            out.push(value);
        }
        StmtKind::Return(Some(e)) | StmtKind::Expr(e) | StmtKind::Raise(Some(e)) => out.push(e),
        StmtKind::If { test, .. } | StmtKind::While { test, .. } => out.push(test),
        StmtKind::For { target, iter, .. } => {
            target_exprs(target, &mut out);
            out.push(iter);
        }
        StmtKind::Return(None) | StmtKind::Raise(None) | StmtKind::Break | StmtKind::Continue | StmtKind::Pass => {}
    }
    out
}

/// All identifiers appearing anywhere in the module: bound names, parameters,
/// function names and referenced names.
pub fn identifiers(module: &Module) -> std::collections::BTreeSet<String> {
    let mut ids = std::collections::BTreeSet::new();
    fn from_target(t: &Target, ids: &mut std::collections::BTreeSet<String>) {
        let mut names = Vec::new();
        t.bound_names(&mut names);
        ids.extend(names);
    }
    fn from_expr(e: &Expr, ids: &mut std::collections::BTreeSet<String>) {
        e.walk(&mut |x| match &x.kind {
            ExprKind::Name(n) => {
                ids.insert(n.clone());
            }
            ExprKind::Lambda(l) => {
                for p in &l.params {
                    ids.insert(p.name.clone());
                }
            }
            ExprKind::Comprehension { generators, .. } => {
                for g in generators {
                    from_target(&g.target, ids);
                }
            }
            _ => {}
        });
    }
    walk_stmts(&module.body, &mut |s| {
        match &s.kind {
            StmtKind::FunctionDef(def) => {
                ids.insert(def.name.clone());
                for p in &def.params {
                    ids.insert(p.name.clone());
                }
            }
            StmtKind::Assign { target, .. } | StmtKind::AugAssign { target, .. } | StmtKind::For { target, .. } => {
                from_target(target, &mut ids)
            }
            StmtKind::TupleAssign { targets, .. } => targets.iter().for_each(|t| from_target(t, &mut ids)),
            _ => {}
        }
        for e in stmt_exprs(s) {
            from_expr(e, &mut ids);
        }
    });
    ids
}
