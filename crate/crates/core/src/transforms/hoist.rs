//! Statement-level hoisting engine shared by both rewrites.
//!
//! Each statement's eager expression tree is rewritten post-order (which is
//! Python's evaluation order for the parts that always run). A node moved
//! into a temporary assignment runs before the statement, so a node may only
//! be hoisted while every impure node evaluated earlier has been hoisted too.
//! Once an impure node stays inline the statement is frozen.

use std::sync::Arc;

use super::strings::{expand_site, site_of};
use super::{ExpansionReport, Fresh, StringOpSite, TransformConfig};
use crate::minipy::{CompElement, Expr, ExprKind, FStringPart, MapEntry, Module, Span, Stmt, StmtKind, Target};

/// Extracts nested BinOp/Call/Subscript/Compare/container subexpressions
/// into fresh temporaries placed right before their statement.
pub fn decompose_expressions(module: &Module, cfg: &TransformConfig) -> Module {
    let mut out = module.clone();
    let mut fresh = Fresh::for_module(module, &cfg.temp_prefix);
    let mut report = ExpansionReport::default();
    let mut pass = Pass { cfg, fresh: &mut fresh, report: &mut report, mode: Mode::Decompose };
    pass.module(&mut out);
    out
}

/// Replaces qualifying single-character string operations with explicit
/// loops.
pub fn expand_string_ops(module: &Module, cfg: &TransformConfig) -> Module {
    expand_string_ops_with_report(module, cfg).0
}

pub fn expand_string_ops_with_report(module: &Module, cfg: &TransformConfig) -> (Module, ExpansionReport) {
    let mut out = module.clone();
    let mut fresh = Fresh::for_module(module, &cfg.temp_prefix);
    let mut report = ExpansionReport::default();
    let mut pass = Pass { cfg, fresh: &mut fresh, report: &mut report, mode: Mode::Expand };
    pass.module(&mut out);
    (out, report)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Decompose,
    Expand,
}

struct Pass<'a> {
    cfg: &'a TransformConfig,
    fresh: &'a mut Fresh,
    report: &'a mut ExpansionReport,
    mode: Mode,
}

impl Pass<'_> {
    /// Module-level statements are left alone; function bodies are rewritten.
    fn module(&mut self, m: &mut Module) {
        for s in &mut m.body {
            self.nested_bodies(s);
        }
    }

    fn nested_bodies(&mut self, s: &mut Stmt) {
        match &mut s.kind {
            StmtKind::FunctionDef(def) => {
                let def = Arc::make_mut(def);
                self.body(&mut def.body);
            }
            StmtKind::If { body, orelse, .. } => {
                self.body(body);
                self.body(orelse);
            }
            StmtKind::For { body, .. } | StmtKind::While { body, .. } => self.body(body),
            _ => {}
        }
    }

    fn body(&mut self, body: &mut Vec<Stmt>) {
        let old = std::mem::take(body);
        for mut s in old {
            self.nested_bodies(&mut s);
            let (pre, keep) = self.statement(&mut s);
            body.extend(pre);
            if keep {
                body.push(s);
            }
        }
    }

    /// Rewrites one statement; returns the statements to insert before it and
    /// whether the statement itself survives.
    fn statement(&mut self, s: &mut Stmt) -> (Vec<Stmt>, bool) {
        let line = s.line();
        let (root, frozen) = match &mut s.kind {
            StmtKind::Assign { value, .. } | StmtKind::TupleAssign { value, .. } => (value, false),
            StmtKind::AugAssign { target, value, .. } => {
                // `x[i] += v` reads x[i] before evaluating v
                let frozen = !matches!(target, Target::Name(_));
                (value, frozen)
            }
            StmtKind::Return(Some(e)) | StmtKind::Expr(e) | StmtKind::Raise(Some(e)) => (e, false),
            StmtKind::If { test, .. } => (test, false),
            StmtKind::For { iter, .. } => (iter, false),
            StmtKind::While { test, .. } => {
                if self.mode == Mode::Expand {
                    self.skip_all(test, line, "loop condition is re-evaluated every iteration");
                }
                return (Vec::new(), true);
            }
            _ => return (Vec::new(), true),
        };
        let was_name = matches!(root.kind, ExprKind::Name(_));
        let sites_left = match self.mode {
            Mode::Expand => count_eager_sites(root, self.cfg),
            Mode::Decompose => 0,
        };
        let mut h = Hoister {
            pass: self,
            pre: Vec::new(),
            frozen,
            sites_left,
            line,
        };
        h.rewrite(root, false);
        let pre = h.pre;
        // a bare expression statement reduced to a temporary does nothing
        let keep = !(matches!(s.kind, StmtKind::Expr(Expr { kind: ExprKind::Name(_), .. })) && !was_name);
        (pre, keep)
    }

    fn skip_all(&mut self, e: &Expr, line: usize, reason: &str) {
        let cfg = self.cfg;
        e.walk(&mut |x| {
            if let Some(op) = site_of(x, cfg) {
                self.report.sites.push(StringOpSite {
                    line,
                    op: op.op(),
                    expanded: false,
                    reason: Some(reason.to_string()),
                });
            }
        });
    }
}

struct Hoister<'p, 'a> {
    pass: &'p mut Pass<'a>,
    pre: Vec<Stmt>,
    frozen: bool,
    /// Eager expansion sites not yet reached.
    sites_left: usize,
    line: usize,
}

impl Hoister<'_, '_> {
    fn rewrite(&mut self, e: &mut Expr, nested: bool) {
        let original_size = e.node_count();
        for c in eager_children(e) {
            self.rewrite(c, true);
        }
        let line = self.line;
        if self.pass.mode == Mode::Expand {
            for (part, reason) in lazy_parts(e) {
                self.pass.skip_all(part, line, reason);
            }
        }
        match self.pass.mode {
            Mode::Decompose => {
                let wanted = nested && extractable(e) && original_size >= self.pass.cfg.complexity_threshold;
                if wanted && !self.frozen {
                    self.hoist(e);
                } else if !is_pure(e) {
                    self.frozen = true;
                }
            }
            Mode::Expand => {
                if let Some(site) = site_of(e, self.pass.cfg) {
                    self.sites_left = self.sites_left.saturating_sub(1);
                    if self.frozen {
                        self.pass.report.sites.push(StringOpSite {
                            line,
                            op: site.op(),
                            expanded: false,
                            reason: Some("an earlier operand cannot be moved before it".into()),
                        });
                        return;
                    }
                    let (stmts, result) = expand_site(e, site, self.pass.fresh);
                    self.pre.extend(stmts);
                    *e = result;
                    self.pass.report.sites.push(StringOpSite { line, op: site.op(), expanded: true, reason: None });
                } else if !is_pure(e) {
                    if self.sites_left > 0 && !self.frozen {
                        self.hoist(e);
                    } else {
                        self.frozen = true;
                    }
                }
            }
        }
    }

    fn hoist(&mut self, e: &mut Expr) {
        let name = self.pass.fresh.name();
        let value = std::mem::replace(e, Expr::name(name.clone()));
        let line = self.line;
        self.pre.push(Stmt::new(
            StmtKind::Assign { target: Target::Name(name), value },
            Span::new(line, 0),
        ));
    }
}

fn count_eager_sites(e: &Expr, cfg: &TransformConfig) -> usize {
    let mut copy = e.clone();
    fn go(e: &mut Expr, cfg: &TransformConfig) -> usize {
        let own = usize::from(site_of(e, cfg).is_some());
        eager_children(e).into_iter().map(|c| go(c, cfg)).sum::<usize>() + own
    }
    go(&mut copy, cfg)
}

/// Kinds eligible for extraction.
fn extractable(e: &Expr) -> bool {
    matches!(
        e.kind,
        ExprKind::BinOp { .. }
            | ExprKind::Call { .. }
            | ExprKind::Subscript { .. }
            | ExprKind::Compare { .. }
            | ExprKind::List(_)
            | ExprKind::Tuple(_)
            | ExprKind::Set(_)
            | ExprKind::Map(_)
    )
}

/// Evaluating it can neither raise nor observe state a hoisted node could
/// change.
pub(super) fn is_pure(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Name(_) | ExprKind::Constant(_) | ExprKind::Lambda(_) => true,
        ExprKind::Attribute { value, .. } => is_pure(value),
        ExprKind::List(items) | ExprKind::Tuple(items) => items.iter().all(is_pure),
        ExprKind::Slice { lower, upper, step } => [lower, upper, step].into_iter().flatten().all(|x| is_pure(x)),
        ExprKind::UnaryOp { operand, .. } => matches!(operand.kind, ExprKind::Constant(_)),
        _ => false,
    }
}

/// Subexpressions that always run, in evaluation order.
pub(super) fn eager_children(e: &mut Expr) -> Vec<&mut Expr> {
    match &mut e.kind {
        ExprKind::Name(_) | ExprKind::Constant(_) | ExprKind::Lambda(_) | ExprKind::Comprehension { .. } => {
            Vec::new()
        }
        ExprKind::BinOp { left, right, .. } => vec![&mut **left, &mut **right],
        ExprKind::UnaryOp { operand, .. } => vec![&mut **operand],
        ExprKind::BoolOp { values, .. } => values.iter_mut().take(1).collect(),
        ExprKind::Compare { left, ops } => {
            let mut v = vec![&mut **left];
            if let Some((_, first)) = ops.first_mut() {
                v.push(first);
            }
            v
        }
        ExprKind::Call { func, args } => {
            let mut v = vec![&mut **func];
            v.extend(args.iter_mut().map(|a| a.value_mut()));
            v
        }
        ExprKind::Attribute { value, .. } => vec![&mut **value],
        ExprKind::Subscript { value, index } => vec![&mut **value, &mut **index],
        ExprKind::Slice { lower, upper, step } => [lower, upper, step]
            .into_iter()
            .filter_map(|x| x.as_mut().map(|b| &mut **b))
            .collect(),
        ExprKind::Conditional { test, .. } => vec![&mut **test],
        ExprKind::List(items) | ExprKind::Tuple(items) | ExprKind::Set(items) => items.iter_mut().collect(),
        ExprKind::Map(entries) => {
            let mut v = Vec::new();
            for en in entries {
                match en {
                    MapEntry::Pair(k, val) => {
                        v.push(k);
                        v.push(val);
                    }
                    MapEntry::Spread(val) => v.push(val),
                }
            }
            v
        }
        ExprKind::FString(parts) => parts
            .iter_mut()
            .filter_map(|p| match p {
                FStringPart::Field { expr, .. } => Some(&mut **expr),
                FStringPart::Literal(_) => None,
            })
            .collect(),
    }
}

/// Subexpressions that may run zero or many times.
fn lazy_parts(e: &Expr) -> Vec<(&Expr, &'static str)> {
    const SHORT: &str = "evaluated conditionally";
    match &e.kind {
        ExprKind::BoolOp { values, .. } => values.iter().skip(1).map(|v| (v, SHORT)).collect(),
        ExprKind::Compare { ops, .. } => ops.iter().skip(1).map(|(_, v)| (v, SHORT)).collect(),
        ExprKind::Conditional { body, orelse, .. } => vec![(&**body, SHORT), (&**orelse, SHORT)],
        ExprKind::Lambda(l) => vec![(&l.body, "inside a lambda")],
        ExprKind::Comprehension { element, generators, .. } => {
            const COMP: &str = "inside a comprehension";
            let mut v = Vec::new();
            match element {
                CompElement::Single(x) => v.push((&**x, COMP)),
                CompElement::Pair(k, x) => {
                    v.push((&**k, COMP));
                    v.push((&**x, COMP));
                }
            }
            for g in generators {
                v.push((&g.iter, COMP));
                v.extend(g.ifs.iter().map(|c| (c, COMP)));
            }
            v
        }
        _ => Vec::new(),
    }
}
