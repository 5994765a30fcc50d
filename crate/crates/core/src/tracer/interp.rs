//! The evaluator: statements, expressions, frames and event recording.

use std::cell::RefCell;
use std::collections::HashSet;
use std::rc::Rc;

use indexmap::IndexMap;

use super::obj::*;
use super::ops;
use super::{builtins, methods, EventKind, Outcome, TraceError, TraceEvent, TraceOptions};
use crate::minipy::ast::*;
use crate::minipy::parse_expr;
use crate::value::Value;

/// Thread stack for an execution: deep MiniPy recursion maps onto deep
/// native recursion.
const EXEC_STACK_BYTES: usize = 256 << 20;

pub(crate) fn run_isolated<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    std::thread::Builder::new()
        .name("minipy-exec".into())
        .stack_size(EXEC_STACK_BYTES)
        .spawn(f)
        .expect("spawn interpreter thread")
        .join()
        .unwrap_or_else(|p| std::panic::resume_unwind(p))
}

pub(crate) enum EntryCall {
    Expr { func: String, call: Expr },
    Values { func: String, args: Vec<Value> },
}

impl EntryCall {
    pub fn parse(text: &str) -> Result<EntryCall, TraceError> {
        let bad = |reason: &str| TraceError::BadEntry {
            call: text.to_string(),
            reason: reason.to_string(),
        };
        let call = parse_expr(text).map_err(|e| bad(&e.to_string()))?;
        match &call.kind {
            ExprKind::Call { func, .. } => match &func.kind {
                ExprKind::Name(n) => Ok(EntryCall::Expr { func: n.clone(), call: call.clone() }),
                _ => Err(bad("callee must be a function name")),
            },
            _ => Err(bad("expected a call such as `main()`")),
        }
    }

    fn func(&self) -> &str {
        match self {
            EntryCall::Expr { func, .. } | EntryCall::Values { func, .. } => func,
        }
    }
}

pub(crate) struct RunResult {
    pub events: Vec<TraceEvent>,
    pub stdout: String,
    pub steps: usize,
    pub halted_at: Option<usize>,
    pub outcome: Outcome,
}

pub(crate) fn run(module: &Module, src: &str, call: &EntryCall, opts: &TraceOptions) -> Result<RunResult, TraceError> {
    let mut it = Interp::new(src, *opts);
    match it.exec_block(&module.body) {
        Ok(_) => {}
        Err(Unwind::Exc(e)) => return Err(TraceError::ModuleInit(e.repr())),
        Err(Unwind::Halt) => return Err(TraceError::ModuleInit("step ceiling reached".into())),
    }
    let defined = matches!(it.globals.borrow().get(call.func()), Some(Obj::Func(_)));
    if !defined {
        return Err(TraceError::BadEntry {
            call: call.func().to_string(),
            reason: "no such function in the program".into(),
        });
    }
    it.tracing = opts.record;
    let result = match call {
        EntryCall::Expr { call, .. } => it.eval(call),
        EntryCall::Values { func, args } => {
            let f = it.globals.borrow().get(func.as_str()).cloned().unwrap();
            let args = args.iter().map(Obj::thaw).collect();
            it.call_value(f, args, Vec::new())
        }
    };
    let outcome = match result {
        Ok(v) => Outcome::Returned(v.freeze()),
        Err(Unwind::Exc(e)) => exc_outcome(&e),
        Err(Unwind::Halt) => Outcome::StepLimit,
    };
    Ok(RunResult {
        events: it.events,
        stdout: it.stdout,
        steps: it.steps,
        halted_at: it.halted_at,
        outcome,
    })
}

fn exc_outcome(e: &Obj) -> Outcome {
    match e {
        Obj::Exc(x) => Outcome::Raised {
            kind: x.kind.clone(),
            message: x.message(),
            rendering: e.repr(),
        },
        other => Outcome::Raised {
            kind: "Exception".into(),
            message: other.to_display(),
            rendering: other.repr(),
        },
    }
}

pub(crate) enum Flow {
    Normal,
    Break,
    Continue,
    Return(Obj),
}

struct Frame {
    id: usize,
    closure: Option<Rc<Closure>>,
    locals: Scope,
    /// Comprehension scopes, innermost last. Invisible to snapshots.
    overlays: Vec<IndexMap<String, Obj>>,
    line: usize,
    depth: usize,
}

pub(crate) struct Interp<'s> {
    lines: Vec<&'s str>,
    globals: Scope,
    frames: Vec<Frame>,
    pub events: Vec<TraceEvent>,
    pub stdout: String,
    pub steps: usize,
    module_steps: usize,
    opts: TraceOptions,
    tracing: bool,
    next_frame_id: usize,
    halted_at: Option<usize>,
}

impl<'s> Interp<'s> {
    fn new(src: &'s str, opts: TraceOptions) -> Self {
        let globals: Scope = Rc::new(RefCell::new(IndexMap::new()));
        let module_frame = Frame {
            id: 0,
            closure: None,
            locals: globals.clone(),
            overlays: Vec::new(),
            line: 1,
            depth: 0,
        };
        Interp {
            lines: src.split('\n').collect(),
            globals,
            frames: vec![module_frame],
            events: Vec::new(),
            stdout: String::new(),
            steps: 0,
            module_steps: 0,
            opts,
            tracing: false,
            next_frame_id: 1,
            halted_at: None,
        }
    }

    fn cur(&self) -> &Frame {
        self.frames.last().expect("frame stack")
    }

    fn cur_mut(&mut self) -> &mut Frame {
        self.frames.last_mut().expect("frame stack")
    }

    fn source_line(&self, line: usize) -> String {
        self.lines.get(line.wrapping_sub(1)).map(|l| l.trim_end_matches('\r').to_string()).unwrap_or_default()
    }

    // ----- events -----------------------------------------------------------

    fn step(&mut self) -> R<()> {
        if self.steps >= self.opts.step_ceiling {
            self.halted_at.get_or_insert(self.events.len());
            return Err(Unwind::Halt);
        }
        self.steps += 1;
        Ok(())
    }

    fn snapshot(&self) -> Vec<(String, String)> {
        let f = self.cur();
        let locals = f.locals.borrow();
        let mut out: Vec<(String, String)> = locals.iter().map(|(k, v)| (k.clone(), v.repr())).collect();
        if let Some(cl) = &f.closure {
            for name in &cl.info.free {
                if locals.contains_key(name) {
                    continue;
                }
                if let Some(v) = cl.env.iter().find_map(|s| s.borrow().get(name).cloned()) {
                    out.push((name.clone(), v.repr()));
                }
            }
        }
        out
    }

    fn record(&mut self, kind: EventKind, payload: Option<String>) {
        let f = self.cur();
        let function = f.closure.as_ref().map(|c| c.qualname.clone()).unwrap_or_default();
        let snapshot = match kind {
            EventKind::Call | EventKind::Line => self.snapshot(),
            _ => Vec::new(),
        };
        let ev = TraceEvent {
            kind,
            frame_id: f.id,
            depth: f.depth,
            function,
            line: f.line,
            action_line: self.source_line(f.line),
            snapshot,
            payload,
        };
        self.events.push(ev);
    }

    fn line_event(&mut self, line: usize) -> R<()> {
        self.cur_mut().line = line;
        if self.cur().closure.is_none() {
            self.module_steps += 1;
            if self.module_steps > self.opts.step_ceiling {
                return raise("RuntimeError", "module-level step ceiling reached");
            }
            return Ok(());
        }
        self.step()?;
        if self.tracing {
            self.record(EventKind::Line, None);
        }
        Ok(())
    }

    // ----- statements -------------------------------------------------------

    pub(crate) fn exec_block(&mut self, body: &[Stmt]) -> R<Flow> {
        for s in body {
            match self.exec_stmt(s)? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn exec_stmt(&mut self, s: &Stmt) -> R<Flow> {
        let line = s.span.line;
        match &s.kind {
            StmtKind::FunctionDef(d) => {
                self.line_event(line)?;
                let f = self.make_function(&d.name, &d.params, FuncBody::Def(d.clone()), line)?;
                self.store(&d.name, f);
            }
            StmtKind::Assign { target, value } => {
                self.line_event(line)?;
                let v = self.eval(value)?;
                self.assign(target, v)?;
            }
            StmtKind::TupleAssign { targets, value } => {
                self.line_event(line)?;
                let v = self.eval(value)?;
                self.assign_tuple(targets, v, false)?;
            }
            StmtKind::AugAssign { target, op, value } => {
                self.line_event(line)?;
                match target {
                    Target::Name(n) => {
                        let cur = self.load(n)?;
                        let rhs = self.eval(value)?;
                        let new = self.inplace(*op, &cur, &rhs)?;
                        self.store(n, new);
                    }
                    Target::Subscript { value: container, index } => {
                        let c = self.eval(container)?;
                        if let ExprKind::Slice { lower, upper, step } = &index.kind {
                            let (lo, up, st) = self.slice_parts(lower, upper, step)?;
                            let cur = ops::getslice(&c, &lo, &up, &st)?;
                            let rhs = self.eval(value)?;
                            let new = self.inplace(*op, &cur, &rhs)?;
                            let items = ops::collect(&new)?;
                            ops::setslice(&c, &lo, &up, &st, items)?;
                        } else {
                            let i = self.eval(index)?;
                            let cur = ops::getitem(&c, &i)?;
                            let rhs = self.eval(value)?;
                            let new = self.inplace(*op, &cur, &rhs)?;
                            ops::setitem(&c, &i, new)?;
                        }
                    }
                    Target::Tuple(_) => return raise("SyntaxError", "illegal expression for augmented assignment"),
                }
            }
            StmtKind::Return(v) => {
                self.line_event(line)?;
                let v = match v {
                    Some(e) => self.eval(e)?,
                    None => Obj::None,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Expr(e) => {
                self.line_event(line)?;
                self.eval(e)?;
            }
            StmtKind::If { test, body, orelse } => {
                self.line_event(line)?;
                let t = self.eval(test)?;
                return if t.truthy() { self.exec_block(body) } else { self.exec_block(orelse) };
            }
            StmtKind::For { target, iter, body } => {
                self.line_event(line)?;
                let iterable = self.eval(iter)?;
                let it = ops::iter_of(&iterable)?;
                loop {
                    let next = ops::next_plain(&mut it.borrow_mut())?;
                    let Some(v) = next else { break };
                    self.assign(target, v)?;
                    match self.exec_block(body)? {
                        Flow::Break => break,
                        r @ Flow::Return(_) => return Ok(r),
                        Flow::Normal | Flow::Continue => {}
                    }
                    self.line_event(line)?;
                }
            }
            StmtKind::While { test, body } => loop {
                self.line_event(line)?;
                if !self.eval(test)?.truthy() {
                    break;
                }
                match self.exec_block(body)? {
                    Flow::Break => break,
                    r @ Flow::Return(_) => return Ok(r),
                    Flow::Normal | Flow::Continue => {}
                }
            },
            StmtKind::Break => {
                self.line_event(line)?;
                return Ok(Flow::Break);
            }
            StmtKind::Continue => {
                self.line_event(line)?;
                return Ok(Flow::Continue);
            }
            StmtKind::Pass => self.line_event(line)?,
            StmtKind::Raise(v) => {
                self.line_event(line)?;
                let Some(e) = v else {
                    return raise("RuntimeError", "No active exception to reraise");
                };
                let v = self.eval(e)?;
                return Err(Unwind::Exc(match v {
                    Obj::Exc(_) => v,
                    Obj::Builtin(name) if EXCEPTION_NAMES.contains(&name) => Obj::Exc(Rc::new(ExcObj {
                        kind: name.to_string(),
                        args: Vec::new(),
                    })),
                    _ => return type_error("exceptions must derive from BaseException"),
                }));
            }
        }
        Ok(Flow::Normal)
    }

    fn inplace(&mut self, op: BinOp, cur: &Obj, rhs: &Obj) -> R<Obj> {
        // `+=` on a list extends it in place; everything else rebinds.
        if let (BinOp::Add, Obj::List(l)) = (op, cur) {
            let items = ops::collect(rhs)?;
            l.borrow_mut().extend(items);
            return Ok(cur.clone());
        }
        if let (BinOp::BitOr, Obj::Set(s), Obj::Set(o)) = (op, cur, rhs) {
            let add: Vec<Key> = o.borrow().iter().cloned().collect();
            s.borrow_mut().extend(add);
            return Ok(cur.clone());
        }
        ops::binop(op, cur, rhs)
    }

    // ----- names ------------------------------------------------------------

    pub(crate) fn load(&self, name: &str) -> R<Obj> {
        let f = self.cur();
        for o in f.overlays.iter().rev() {
            if let Some(v) = o.get(name) {
                return Ok(v.clone());
            }
        }
        if let Some(cl) = &f.closure {
            if cl.info.locals.contains(name) {
                return match f.locals.borrow().get(name) {
                    Some(v) => Ok(v.clone()),
                    None => raise(
                        "UnboundLocalError",
                        format!("cannot access local variable '{name}' where it is not associated with a value"),
                    ),
                };
            }
            for scope in &cl.env {
                if let Some(v) = scope.borrow().get(name) {
                    return Ok(v.clone());
                }
            }
        }
        if let Some(v) = self.globals.borrow().get(name) {
            return Ok(v.clone());
        }
        match builtins::lookup(name) {
            Some(b) => Ok(b),
            None => raise("NameError", format!("name '{name}' is not defined")),
        }
    }

    fn store(&mut self, name: &str, v: Obj) {
        self.cur().locals.borrow_mut().insert(name.to_string(), v);
    }

    fn assign(&mut self, t: &Target, v: Obj) -> R<()> {
        match t {
            Target::Name(n) => {
                self.store(n, v);
                Ok(())
            }
            Target::Subscript { value, index } => self.assign_subscript(value, index, v),
            Target::Tuple(ts) => self.assign_tuple(ts, v, false),
        }
    }

    fn assign_subscript(&mut self, value: &Expr, index: &Expr, v: Obj) -> R<()> {
        let c = self.eval(value)?;
        if let ExprKind::Slice { lower, upper, step } = &index.kind {
            let (lo, up, st) = self.slice_parts(lower, upper, step)?;
            let items = ops::collect(&v)?;
            return ops::setslice(&c, &lo, &up, &st, items);
        }
        let i = self.eval(index)?;
        ops::setitem(&c, &i, v)
    }

    fn assign_tuple(&mut self, ts: &[Target], v: Obj, overlay: bool) -> R<()> {
        let items = match &v {
            Obj::Str(_) | Obj::List(_) | Obj::Tuple(_) | Obj::Set(_) | Obj::Map(_) | Obj::Range(_) | Obj::Iter(_) | Obj::View(..) => {
                ops::collect(&v)?
            }
            other => return type_error(format!("cannot unpack non-iterable {} object", other.type_name())),
        };
        if items.len() > ts.len() {
            return raise("ValueError", format!("too many values to unpack (expected {})", ts.len()));
        }
        if items.len() < ts.len() {
            return raise(
                "ValueError",
                format!("not enough values to unpack (expected {}, got {})", ts.len(), items.len()),
            );
        }
        for (t, x) in ts.iter().zip(items) {
            if overlay {
                self.assign_overlay(t, x)?;
            } else {
                self.assign(t, x)?;
            }
        }
        Ok(())
    }

    fn assign_overlay(&mut self, t: &Target, v: Obj) -> R<()> {
        match t {
            Target::Name(n) => {
                let f = self.cur_mut();
                f.overlays.last_mut().expect("comprehension scope").insert(n.clone(), v);
                Ok(())
            }
            Target::Subscript { value, index } => self.assign_subscript(value, index, v),
            Target::Tuple(ts) => self.assign_tuple(ts, v, true),
        }
    }

    // ----- functions --------------------------------------------------------

    fn make_function(&mut self, name: &str, params: &[Param], body: FuncBody, def_line: usize) -> R<Obj> {
        let mut defaults = Vec::with_capacity(params.len());
        for p in params {
            defaults.push(match &p.default {
                Some(d) => Some(self.eval(d)?),
                None => None,
            });
        }
        let f = self.cur();
        let (env, qualname, enclosing) = match &f.closure {
            Some(cl) => {
                let mut env: Vec<Scope> = f
                    .overlays
                    .iter()
                    .rev()
                    .map(|o| Rc::new(RefCell::new(o.clone())))
                    .collect();
                env.push(f.locals.clone());
                env.extend(cl.env.iter().cloned());
                let mut enclosing: HashSet<String> = cl.info.locals.clone();
                enclosing.extend(cl.info.free.iter().cloned());
                enclosing.extend(f.overlays.iter().flat_map(|o| o.keys().cloned()));
                (env, format!("{}.<locals>.{}", cl.qualname, name), enclosing)
            }
            None => (Vec::new(), name.to_string(), HashSet::new()),
        };
        let info = Rc::new(func_info(params, &body, &enclosing));
        Ok(Obj::Func(Rc::new(Closure {
            name: name.to_string(),
            qualname,
            params: params.to_vec(),
            defaults,
            body,
            def_line,
            env,
            info,
        })))
    }

    pub(crate) fn call_value(&mut self, f: Obj, args: Vec<Obj>, kwargs: Vec<(String, Obj)>) -> R<Obj> {
        match f {
            Obj::Func(cl) => self.call_closure(cl, args, kwargs),
            Obj::Builtin(name) => builtins::call(self, name, args, kwargs),
            Obj::Method(m) => match &m.recv {
                Some(r) => methods::call(self, r.clone(), &m.name, args, kwargs),
                None => {
                    let mut args = args;
                    if args.is_empty() {
                        return type_error(format!(
                            "unbound method {}.{}() needs an argument",
                            m.type_name, m.name
                        ));
                    }
                    let recv = args.remove(0);
                    if recv.type_name() != m.type_name {
                        return type_error(format!(
                            "descriptor '{}' for '{}' objects doesn't apply to a '{}' object",
                            m.name,
                            m.type_name,
                            recv.type_name()
                        ));
                    }
                    methods::call(self, recv, &m.name, args, kwargs)
                }
            },
            other => type_error(format!("'{}' object is not callable", other.type_name())),
        }
    }

    fn bind_args(&self, cl: &Closure, args: Vec<Obj>, kwargs: Vec<(String, Obj)>) -> R<IndexMap<String, Obj>> {
        let n = cl.params.len();
        let fname = &cl.name;
        if args.len() > n {
            let required = cl.defaults.iter().filter(|d| d.is_none()).count();
            let takes = if required == n {
                format!("{n} positional argument{}", if n == 1 { "" } else { "s" })
            } else {
                format!("from {required} to {n} positional arguments")
            };
            let given = args.len();
            return type_error(format!(
                "{fname}() takes {takes} but {given} {} given",
                if given == 1 { "was" } else { "were" }
            ));
        }
        let mut slots: Vec<Option<Obj>> = args.into_iter().map(Some).collect();
        slots.resize(n, None);
        for (k, v) in kwargs {
            let Some(pos) = cl.params.iter().position(|p| p.name == k) else {
                return type_error(format!("{fname}() got an unexpected keyword argument '{k}'"));
            };
            if slots[pos].is_some() {
                return type_error(format!("{fname}() got multiple values for argument '{k}'"));
            }
            slots[pos] = Some(v);
        }
        let mut missing = Vec::new();
        for (i, slot) in slots.iter_mut().enumerate() {
            if slot.is_none() {
                match &cl.defaults[i] {
                    Some(d) => *slot = Some(d.clone()),
                    None => missing.push(format!("'{}'", cl.params[i].name)),
                }
            }
        }
        if !missing.is_empty() {
            let list = match missing.len() {
                1 => missing[0].clone(),
                2 => format!("{} and {}", missing[0], missing[1]),
                k => format!("{}, and {}", missing[..k - 1].join(", "), missing[k - 1]),
            };
            return type_error(format!(
                "{fname}() missing {} required positional argument{}: {list}",
                missing.len(),
                if missing.len() == 1 { "" } else { "s" }
            ));
        }
        Ok(cl
            .params
            .iter()
            .zip(slots)
            .map(|(p, v)| (p.name.clone(), v.expect("bound")))
            .collect())
    }

    fn call_closure(&mut self, cl: Rc<Closure>, args: Vec<Obj>, kwargs: Vec<(String, Obj)>) -> R<Obj> {
        let locals = self.bind_args(&cl, args, kwargs)?;
        let depth = self.frames.len() - 1;
        if depth >= self.opts.max_depth {
            return raise("RecursionError", "maximum recursion depth exceeded");
        }
        let id = self.next_frame_id;
        self.next_frame_id += 1;
        self.frames.push(Frame {
            id,
            closure: Some(cl.clone()),
            locals: Rc::new(RefCell::new(locals)),
            overlays: Vec::new(),
            line: cl.def_line,
            depth,
        });
        let r = self.run_frame(&cl);
        self.frames.pop();
        r
    }

    fn run_frame(&mut self, cl: &Closure) -> R<Obj> {
        self.step()?;
        if self.tracing {
            self.record(EventKind::Call, None);
        }
        let r = match &cl.body {
            FuncBody::Def(d) => match self.exec_block(&d.body) {
                Ok(Flow::Return(v)) => Ok(v),
                Ok(_) => Ok(Obj::None),
                Err(e) => Err(e),
            },
            FuncBody::Lambda(l) => match self.line_event(cl.def_line) {
                Ok(()) => self.eval(&l.body),
                Err(e) => Err(e),
            },
        };
        if self.tracing {
            match &r {
                Ok(v) => {
                    let p = v.repr();
                    self.record(EventKind::Return, Some(p));
                }
                Err(Unwind::Exc(e)) => {
                    let p = e.repr();
                    self.record(EventKind::Exception, Some(p));
                }
                Err(Unwind::Halt) => {}
            }
        }
        r
    }

    // ----- expressions ------------------------------------------------------

    fn eval_args(&mut self, args: &[Arg]) -> R<(Vec<Obj>, Vec<(String, Obj)>)> {
        let mut pos = Vec::with_capacity(args.len());
        let mut kw = Vec::new();
        for a in args {
            match a {
                Arg::Positional(e) => pos.push(self.eval(e)?),
                Arg::Keyword(k, e) => kw.push((k.clone(), self.eval(e)?)),
            }
        }
        Ok((pos, kw))
    }

    fn slice_parts(
        &mut self,
        lower: &Option<Box<Expr>>,
        upper: &Option<Box<Expr>>,
        step: &Option<Box<Expr>>,
    ) -> R<(Option<Obj>, Option<Obj>, Option<Obj>)> {
        let mut part = |e: &Option<Box<Expr>>| -> R<Option<Obj>> {
            match e {
                Some(e) => Ok(Some(self.eval(e)?)),
                None => Ok(None),
            }
        };
        Ok((part(lower)?, part(upper)?, part(step)?))
    }

    pub(crate) fn eval(&mut self, e: &Expr) -> R<Obj> {
        match &e.kind {
            ExprKind::Name(n) => self.load(n),
            ExprKind::Constant(c) => Ok(match c {
                Constant::None => Obj::None,
                Constant::Bool(b) => Obj::Bool(*b),
                Constant::Int(i) => Obj::Int(i.clone()),
                Constant::Float(f) => Obj::Float(*f),
                Constant::Str(s) => Obj::str(s),
            }),
            ExprKind::BinOp { op, left, right } => {
                let l = self.eval(left)?;
                let r = self.eval(right)?;
                ops::binop(*op, &l, &r)
            }
            ExprKind::UnaryOp { op, operand } => {
                let v = self.eval(operand)?;
                ops::unary(*op, &v)
            }
            ExprKind::BoolOp { op, values } => {
                let mut last = Obj::None;
                for v in values {
                    last = self.eval(v)?;
                    let t = last.truthy();
                    if (*op == BoolOp::And && !t) || (*op == BoolOp::Or && t) {
                        return Ok(last);
                    }
                }
                Ok(last)
            }
            ExprKind::Compare { left, ops: chain } => {
                let mut l = self.eval(left)?;
                for (op, right) in chain {
                    let r = self.eval(right)?;
                    if !ops::compare(*op, &l, &r)? {
                        return Ok(Obj::Bool(false));
                    }
                    l = r;
                }
                Ok(Obj::Bool(true))
            }
            ExprKind::Call { func, args } => {
                if let ExprKind::Attribute { value, attr } = &func.kind {
                    let recv = self.eval(value)?;
                    let (a, kw) = self.eval_args(args)?;
                    return self.call_method(recv, attr, a, kw);
                }
                let f = self.eval(func)?;
                let (a, kw) = self.eval_args(args)?;
                self.call_value(f, a, kw)
            }
            ExprKind::Attribute { value, attr } => {
                let recv = self.eval(value)?;
                self.attribute(recv, attr)
            }
            ExprKind::Subscript { value, index } => {
                let c = self.eval(value)?;
                if let ExprKind::Slice { lower, upper, step } = &index.kind {
                    let (lo, up, st) = self.slice_parts(lower, upper, step)?;
                    return ops::getslice(&c, &lo, &up, &st);
                }
                let i = self.eval(index)?;
                ops::getitem(&c, &i)
            }
            ExprKind::Slice { .. } => type_error("slice outside a subscript"),
            ExprKind::Conditional { test, body, orelse } => {
                if self.eval(test)?.truthy() {
                    self.eval(body)
                } else {
                    self.eval(orelse)
                }
            }
            ExprKind::Lambda(l) => {
                self.make_function("<lambda>", &l.params, FuncBody::Lambda(l.clone()), e.span.line)
            }
            ExprKind::List(items) => {
                let v = items.iter().map(|i| self.eval(i)).collect::<R<Vec<_>>>()?;
                Ok(Obj::list(v))
            }
            ExprKind::Tuple(items) => {
                let v = items.iter().map(|i| self.eval(i)).collect::<R<Vec<_>>>()?;
                Ok(Obj::tuple(v))
            }
            ExprKind::Set(items) => {
                let mut keys = indexmap::IndexSet::new();
                for i in items {
                    let v = self.eval(i)?;
                    keys.insert(key_of(&v)?);
                }
                Ok(new_set(keys))
            }
            ExprKind::Map(entries) => {
                let mut m: IndexMap<Key, Obj> = IndexMap::new();
                for en in entries {
                    match en {
                        MapEntry::Pair(k, v) => {
                            let k = self.eval(k)?;
                            let v = self.eval(v)?;
                            m.insert(key_of(&k)?, v);
                        }
                        MapEntry::Spread(x) => match self.eval(x)? {
                            Obj::Map(other) => {
                                for (k, v) in other.borrow().iter() {
                                    m.insert(k.clone(), v.clone());
                                }
                            }
                            o => return type_error(format!("'{}' object is not a mapping", o.type_name())),
                        },
                    }
                }
                Ok(new_map(m))
            }
            ExprKind::Comprehension { kind, element, generators } => self.comprehension(*kind, element, generators),
            ExprKind::FString(parts) => {
                let mut out = String::new();
                for p in parts {
                    match p {
                        FStringPart::Literal(s) => out.push_str(s),
                        FStringPart::Field { expr, conversion, format_spec } => {
                            let mut v = self.eval(expr)?;
                            match conversion {
                                Some(Conversion::Repr) => v = Obj::str(&v.repr()),
                                Some(Conversion::Str) => v = Obj::str(&v.to_display()),
                                None => {}
                            }
                            out.push_str(&super::format::format_obj(&v, format_spec.as_deref().unwrap_or(""))?);
                        }
                    }
                }
                Ok(Obj::str(&out))
            }
        }
    }

    fn attribute(&mut self, recv: Obj, attr: &str) -> R<Obj> {
        if let Obj::Builtin(ty) = &recv {
            if methods::exists(ty, attr) {
                return Ok(Obj::Method(Rc::new(BoundMethod {
                    recv: None,
                    type_name: ty,
                    name: attr.to_string(),
                })));
            }
        }
        let ty = recv.type_name();
        if methods::exists(ty, attr) {
            return Ok(Obj::Method(Rc::new(BoundMethod {
                recv: Some(recv),
                type_name: ty,
                name: attr.to_string(),
            })));
        }
        if let (Obj::Exc(e), "args") = (&recv, attr) {
            return Ok(Obj::tuple(e.args.clone()));
        }
        raise("AttributeError", format!("'{ty}' object has no attribute '{attr}'"))
    }

    fn call_method(&mut self, recv: Obj, attr: &str, mut args: Vec<Obj>, kwargs: Vec<(String, Obj)>) -> R<Obj> {
        if let Obj::Builtin(ty) = &recv {
            if *ty == "dict" && attr == "fromkeys" {
                return methods::dict_fromkeys(args);
            }
            if methods::exists(ty, attr) {
                if args.is_empty() {
                    return type_error(format!("unbound method {ty}.{attr}() needs an argument"));
                }
                let r = args.remove(0);
                return methods::call(self, r, attr, args, kwargs);
            }
        }
        if !methods::exists(recv.type_name(), attr) {
            return raise(
                "AttributeError",
                format!("'{}' object has no attribute '{attr}'", recv.type_name()),
            );
        }
        methods::call(self, recv, attr, args, kwargs)
    }

    fn comprehension(&mut self, kind: CompKind, element: &CompElement, gens: &[CompFor]) -> R<Obj> {
        self.cur_mut().overlays.push(IndexMap::new());
        let mut items = Vec::new();
        let mut pairs = Vec::new();
        let r = self.comp_loop(gens, 0, element, &mut items, &mut pairs);
        self.cur_mut().overlays.pop();
        r?;
        Ok(match kind {
            CompKind::List => Obj::list(items),
            CompKind::Generator => Obj::Iter(Rc::new(RefCell::new(IterState::Named {
                label: "generator",
                items,
                idx: 0,
            }))),
            CompKind::Set => {
                let mut keys = indexmap::IndexSet::new();
                for i in &items {
                    keys.insert(key_of(i)?);
                }
                new_set(keys)
            }
            CompKind::Map => {
                let mut m = IndexMap::new();
                for (k, v) in pairs {
                    m.insert(key_of(&k)?, v);
                }
                new_map(m)
            }
        })
    }

    fn comp_loop(
        &mut self,
        gens: &[CompFor],
        i: usize,
        element: &CompElement,
        items: &mut Vec<Obj>,
        pairs: &mut Vec<(Obj, Obj)>,
    ) -> R<()> {
        if i == gens.len() {
            match element {
                CompElement::Single(e) => items.push(self.eval(e)?),
                CompElement::Pair(k, v) => {
                    let k = self.eval(k)?;
                    let v = self.eval(v)?;
                    pairs.push((k, v));
                }
            }
            return Ok(());
        }
        let g = &gens[i];
        let iterable = self.eval(&g.iter)?;
        let it = ops::iter_of(&iterable)?;
        loop {
            let next = ops::next_plain(&mut it.borrow_mut())?;
            let Some(v) = next else { break };
            self.assign_overlay(&g.target, v)?;
            let mut keep = true;
            for cond in &g.ifs {
                if !self.eval(cond)?.truthy() {
                    keep = false;
                    break;
                }
            }
            if keep {
                self.comp_loop(gens, i + 1, element, items, pairs)?;
            }
        }
        Ok(())
    }

    pub(crate) fn write_stdout(&mut self, s: &str) {
        self.stdout.push_str(s);
    }
}

/// Local and free names of a function, Python-style: anything assigned in
/// the body is local; names read that are local to an enclosing function
/// are free.
fn func_info(params: &[Param], body: &FuncBody, enclosing: &HashSet<String>) -> FuncInfo {
    let mut locals: HashSet<String> = params.iter().map(|p| p.name.clone()).collect();
    let mut refs: Vec<String> = Vec::new();
    let note_refs = |e: &Expr, refs: &mut Vec<String>| {
        e.walk(&mut |x| {
            if let ExprKind::Name(n) = &x.kind {
                if !refs.contains(n) {
                    refs.push(n.clone());
                }
            }
        })
    };
    match body {
        FuncBody::Def(d) => {
            collect_locals(&d.body, &mut locals);
            walk_stmts(&d.body, &mut |s| {
                for e in stmt_exprs(s) {
                    note_refs(e, &mut refs);
                }
            });
        }
        FuncBody::Lambda(l) => note_refs(&l.body, &mut refs),
    }
    let free = refs
        .into_iter()
        .filter(|n| !locals.contains(n) && enclosing.contains(n))
        .collect();
    FuncInfo { locals, free }
}

fn collect_locals(body: &[Stmt], out: &mut HashSet<String>) {
    for s in body {
        let mut names = Vec::new();
        match &s.kind {
            StmtKind::FunctionDef(d) => names.push(d.name.clone()),
            StmtKind::Assign { target, .. } | StmtKind::AugAssign { target, .. } => target.bound_names(&mut names),
            StmtKind::TupleAssign { targets, .. } => targets.iter().for_each(|t| t.bound_names(&mut names)),
            StmtKind::For { target, body, .. } => {
                target.bound_names(&mut names);
                collect_locals(body, out);
            }
            StmtKind::While { body, .. } => collect_locals(body, out),
            StmtKind::If { body, orelse, .. } => {
                collect_locals(body, out);
                collect_locals(orelse, out);
            }
            _ => {}
        }
        out.extend(names);
    }
}
