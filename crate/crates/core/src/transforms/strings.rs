//! Character-level loop expansions for single-character string operations.

use super::hoist::eager_children;
use super::{Fresh, StringOp, TransformConfig};
use crate::minipy::{parse_source, Arg, CmpOp, Constant, Expr, ExprKind, Stmt, StmtKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) struct Site {
    op: StringOp,
    /// `not in`
    negated: bool,
}

impl Site {
    pub(super) fn op(self) -> StringOp {
        self.op
    }
}

fn single_char(e: &Expr, cfg: &TransformConfig) -> bool {
    match &e.kind {
        ExprKind::Constant(Constant::Str(s)) => s.chars().count() == 1,
        ExprKind::Name(n) => cfg.assume_single_char.contains(n),
        _ => false,
    }
}

/// Whether `e` is an operation the expander handles.
pub(super) fn site_of(e: &Expr, cfg: &TransformConfig) -> Option<Site> {
    let enabled = |op: StringOp| cfg.string_ops_enabled.contains(&op).then_some(op);
    match &e.kind {
        ExprKind::Call { func, args } => {
            let ExprKind::Attribute { attr, .. } = &func.kind else {
                return None;
            };
            let op = attr.parse::<StringOp>().ok().filter(|o| *o != StringOp::Contains)?;
            let op = enabled(op)?;
            let positional: Vec<&Expr> = args
                .iter()
                .map(|a| match a {
                    Arg::Positional(x) => Some(x),
                    Arg::Keyword(..) => None,
                })
                .collect::<Option<_>>()?;
            let arity = if op == StringOp::Replace { 2 } else { 1 };
            (positional.len() == arity && single_char(positional[0], cfg)).then_some(Site { op, negated: false })
        }
        ExprKind::Compare { left, ops } => match ops.as_slice() {
            [(cmp @ (CmpOp::In | CmpOp::NotIn), _)] if single_char(left, cfg) => {
                enabled(StringOp::Contains).map(|op| Site { op, negated: *cmp == CmpOp::NotIn })
            }
            _ => None,
        },
        _ => None,
    }
}

/// Statements computing the site's value, and the expression standing in for
/// it afterwards.
pub(super) fn expand_site(e: &Expr, site: Site, fresh: &mut Fresh) -> (Vec<Stmt>, Expr) {
    let (recv, ch, new) = operands(e);
    let l = fresh.name();
    let r = fresh.name();
    let i = fresh.name();
    let forward = format!("range(len({l}))");
    let text = match site.op {
        StringOp::Index | StringOp::Find | StringOp::Rindex | StringOp::Rfind => {
            let range = match site.op {
                StringOp::Rindex | StringOp::Rfind => format!("range(len({l}) - 1, -1, -1)"),
                _ => forward,
            };
            let mut t = format!(
                "{l} = list(__recv__)\n{r} = -1\nfor {i} in {range}:\n    if {l}[{i}] == __ch__:\n        {r} = {i}\n        break\n"
            );
            if matches!(site.op, StringOp::Index | StringOp::Rindex) {
                t.push_str(&format!("if {r} == -1:\n    raise ValueError('substring not found')\n"));
            }
            t
        }
        StringOp::Count => format!(
            "{l} = list(__recv__)\n{r} = 0\nfor {i} in {forward}:\n    if {l}[{i}] == __ch__:\n        {r} += 1\n"
        ),
        StringOp::Replace => format!(
            "{l} = list(__recv__)\n{r} = ''\nfor {i} in {forward}:\n    if {l}[{i}] == __ch__:\n        {r} += __new__\n    else:\n        {r} += {l}[{i}]\n"
        ),
        StringOp::Contains => {
            let (init, hit) = if site.negated { ("True", "False") } else { ("False", "True") };
            format!(
                "{l} = list(__recv__)\n{r} = {init}\nfor {i} in {forward}:\n    if {l}[{i}] == __ch__:\n        {r} = {hit}\n        break\n"
            )
        }
    };
    let mut body = parse_source(&text).expect("expansion templates parse").body;
    let line = e.span.line;
    for s in &mut body {
        subst_stmt(s, &recv, &ch, new.as_ref(), line);
    }
    (body, Expr::name(r))
}

fn operands(e: &Expr) -> (Expr, Expr, Option<Expr>) {
    match &e.kind {
        ExprKind::Call { func, args } => {
            let ExprKind::Attribute { value, .. } = &func.kind else {
                unreachable!("site_of checked the shape")
            };
            let arg = |k: usize| args.get(k).map(|a| a.value().clone());
            ((**value).clone(), arg(0).expect("one argument"), arg(1))
        }
        ExprKind::Compare { left, ops } => (ops[0].1.clone(), (**left).clone(), None),
        _ => unreachable!("site_of checked the shape"),
    }
}

fn subst_expr(e: &mut Expr, recv: &Expr, ch: &Expr, new: Option<&Expr>) {
    if let ExprKind::Name(n) = &e.kind {
        let with = match n.as_str() {
            "__recv__" => Some(recv),
            "__ch__" => Some(ch),
            "__new__" => new,
            _ => None,
        };
        if let Some(w) = with {
            *e = w.clone();
        }
        return;
    }
    for c in eager_children(e) {
        subst_expr(c, recv, ch, new);
    }
}

fn subst_stmt(s: &mut Stmt, recv: &Expr, ch: &Expr, new: Option<&Expr>, line: usize) {
    s.span.line = line;
    match &mut s.kind {
        StmtKind::Assign { value, .. } | StmtKind::AugAssign { value, .. } => subst_expr(value, recv, ch, new),
        StmtKind::Raise(Some(e)) | StmtKind::Expr(e) => subst_expr(e, recv, ch, new),
        StmtKind::For { iter, body, .. } => {
            subst_expr(iter, recv, ch, new);
            body.iter_mut().for_each(|b| subst_stmt(b, recv, ch, new, line));
        }
        StmtKind::If { test, body, orelse } => {
            subst_expr(test, recv, ch, new);
            body.iter_mut().chain(orelse.iter_mut()).for_each(|b| subst_stmt(b, recv, ch, new, line));
        }
        _ => {}
    }
}
