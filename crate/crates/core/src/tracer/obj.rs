//! Runtime objects of the interpreter.
//!
//! `Obj` is the mutable, reference-counted heap model used while a program
//! runs. It never escapes an execution: everything handed out is frozen into
//! a [`Value`] first.

use std::cell::RefCell;
use std::collections::HashSet;
use std::hash::{Hash, Hasher};
use std::rc::Rc;
use std::sync::Arc;

use indexmap::{IndexMap, IndexSet};
use num_bigint::BigInt;
use num_traits::{FromPrimitive, ToPrimitive, Zero};

use crate::minipy::ast::{FunctionDef, Lambda, Param};
use crate::value::Value;

pub(crate) type Scope = Rc<RefCell<IndexMap<String, Obj>>>;
pub(crate) type ListRef = Rc<RefCell<Vec<Obj>>>;
pub(crate) type SetRef = Rc<RefCell<IndexSet<Key>>>;
pub(crate) type MapRef = Rc<RefCell<IndexMap<Key, Obj>>>;

#[derive(Clone)]
pub(crate) enum Obj {
    None,
    Bool(bool),
    Int(BigInt),
    Float(f64),
    Str(Rc<str>),
    List(ListRef),
    Tuple(Rc<[Obj]>),
    Set(SetRef),
    Map(MapRef),
    Func(Rc<Closure>),
    /// Builtin function or type, by name (`len`, `int`, `ValueError`).
    Builtin(&'static str),
    Method(Rc<BoundMethod>),
    Iter(Rc<RefCell<IterState>>),
    Range(Rc<RangeObj>),
    View(ViewKind, MapRef),
    Exc(Rc<ExcObj>),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum ViewKind {
    Keys,
    Values,
    Items,
}

pub(crate) struct BoundMethod {
    /// `None` for methods fetched from a type, e.g. `str.upper`.
    pub recv: Option<Obj>,
    pub type_name: &'static str,
    pub name: String,
}

pub(crate) struct RangeObj {
    pub start: i64,
    pub stop: i64,
    pub step: i64,
}

impl RangeObj {
    pub fn len(&self) -> i64 {
        let (start, stop, step) = (self.start as i128, self.stop as i128, self.step as i128);
        let n = if step > 0 {
            (stop - start + step - 1) / step
        } else {
            (start - stop - step - 1) / -step
        };
        n.max(0) as i64
    }

    pub fn get(&self, i: i64) -> i64 {
        self.start + i * self.step
    }

    pub fn repr(&self) -> String {
        if self.step == 1 {
            format!("range({}, {})", self.start, self.stop)
        } else {
            format!("range({}, {}, {})", self.start, self.stop, self.step)
        }
    }
}

pub(crate) struct ExcObj {
    pub kind: String,
    pub args: Vec<Obj>,
}

impl ExcObj {
    pub fn message(&self) -> String {
        match self.args.as_slice() {
            [] => String::new(),
            [one] => one.to_display(),
            many => Obj::Tuple(many.to_vec().into()).repr(),
        }
    }
}

pub(crate) enum FuncBody {
    Def(Arc<FunctionDef>),
    Lambda(Arc<Lambda>),
}

/// Names assigned anywhere in a function body (Python's compile-time local
/// set) and names it reads that belong to enclosing functions.
pub(crate) struct FuncInfo {
    pub locals: HashSet<String>,
    pub free: Vec<String>,
}

pub(crate) struct Closure {
    pub name: String,
    pub qualname: String,
    pub params: Vec<Param>,
    pub defaults: Vec<Option<Obj>>,
    pub body: FuncBody,
    pub def_line: usize,
    /// Enclosing function scopes, innermost first.
    pub env: Vec<Scope>,
    pub info: Rc<FuncInfo>,
}

pub(crate) enum IterState {
    List { list: ListRef, idx: usize },
    Items { items: Vec<Obj>, idx: usize },
    Range { cur: i64, stop: i64, step: i64 },
    /// Snapshot of a set or dict, invalidated when the size changes.
    Sized { items: Vec<Obj>, idx: usize, watch: SizeWatch },
    /// Named iterator object (`map`, `zip`, generator) over materialized items.
    Named { label: &'static str, items: Vec<Obj>, idx: usize },
}

pub(crate) enum SizeWatch {
    Set(SetRef, usize),
    Map(MapRef, usize),
}

/// Hashable wrapper with Python key semantics (`1`, `1.0` and `True` collide).
#[derive(Clone)]
pub(crate) struct Key(pub Obj);

impl Hash for Key {
    fn hash<H: Hasher>(&self, h: &mut H) {
        hash_obj(&self.0, h)
    }
}

fn hash_obj<H: Hasher>(o: &Obj, h: &mut H) {
    match o {
        Obj::None => 0u8.hash(h),
        Obj::Bool(b) => BigInt::from(*b as u8).hash(h),
        Obj::Int(i) => i.hash(h),
        Obj::Float(f) => {
            if f.is_finite() && f.fract() == 0.0 {
                BigInt::from_f64(*f).unwrap_or_default().hash(h)
            } else {
                f.to_bits().hash(h)
            }
        }
        Obj::Str(s) => {
            1u8.hash(h);
            s.hash(h)
        }
        Obj::Tuple(items) => {
            2u8.hash(h);
            items.len().hash(h);
            for i in items.iter() {
                hash_obj(i, h);
            }
        }
        Obj::Func(f) => (Rc::as_ptr(f) as usize).hash(h),
        Obj::Builtin(n) => n.hash(h),
        Obj::Range(r) => (r.start, r.stop, r.step).hash(h),
        _ => 3u8.hash(h),
    }
}

impl PartialEq for Key {
    fn eq(&self, other: &Key) -> bool {
        self.0.py_eq(&other.0)
    }
}

impl Eq for Key {}

impl Obj {
    pub fn str(s: &str) -> Obj {
        Obj::Str(Rc::from(s))
    }

    pub fn int(i: i64) -> Obj {
        Obj::Int(BigInt::from(i))
    }

    pub fn list(items: Vec<Obj>) -> Obj {
        Obj::List(Rc::new(RefCell::new(items)))
    }

    pub fn tuple(items: Vec<Obj>) -> Obj {
        Obj::Tuple(items.into())
    }

    pub fn exc(kind: &str, msg: impl Into<String>) -> Obj {
        Obj::Exc(Rc::new(ExcObj {
            kind: kind.to_string(),
            args: vec![Obj::str(&msg.into())],
        }))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Obj::None => "NoneType",
            Obj::Bool(_) => "bool",
            Obj::Int(_) => "int",
            Obj::Float(_) => "float",
            Obj::Str(_) => "str",
            Obj::List(_) => "list",
            Obj::Tuple(_) => "tuple",
            Obj::Set(_) => "set",
            Obj::Map(_) => "dict",
            Obj::Func(_) => "function",
            Obj::Builtin(n) if is_type_name(n) => "type",
            Obj::Builtin(_) => "builtin_function_or_method",
            Obj::Method(_) => "builtin_function_or_method",
            Obj::Iter(it) => match &*it.borrow() {
                IterState::Named { label, .. } => label,
                IterState::List { .. } => "list_iterator",
                IterState::Range { .. } => "range_iterator",
                IterState::Items { .. } => "iterator",
                IterState::Sized { watch: SizeWatch::Set(..), .. } => "set_iterator",
                IterState::Sized { watch: SizeWatch::Map(..), .. } => "dict_keyiterator",
            },
            Obj::Range(_) => "range",
            Obj::View(ViewKind::Keys, _) => "dict_keys",
            Obj::View(ViewKind::Values, _) => "dict_values",
            Obj::View(ViewKind::Items, _) => "dict_items",
            Obj::Exc(_) => "exception",
        }
    }

    pub fn is_hashable(&self) -> bool {
        match self {
            Obj::List(_) | Obj::Set(_) | Obj::Map(_) | Obj::View(..) => false,
            Obj::Tuple(items) => items.iter().all(Obj::is_hashable),
            _ => true,
        }
    }

    pub fn truthy(&self) -> bool {
        match self {
            Obj::None => false,
            Obj::Bool(b) => *b,
            Obj::Int(i) => !i.is_zero(),
            Obj::Float(f) => *f != 0.0,
            Obj::Str(s) => !s.is_empty(),
            Obj::List(l) => !l.borrow().is_empty(),
            Obj::Tuple(t) => !t.is_empty(),
            Obj::Set(s) => !s.borrow().is_empty(),
            Obj::Map(m) | Obj::View(_, m) => !m.borrow().is_empty(),
            Obj::Range(r) => r.len() > 0,
            _ => true,
        }
    }

    /// Integer view of ints and bools.
    pub fn as_bigint(&self) -> Option<BigInt> {
        match self {
            Obj::Int(i) => Some(i.clone()),
            Obj::Bool(b) => Some(BigInt::from(*b as u8)),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        self.as_bigint().and_then(|i| i.to_i64())
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Obj::Float(f) => Some(*f),
            Obj::Int(i) => Some(i.to_f64().unwrap_or(f64::INFINITY)),
            Obj::Bool(b) => Some(*b as u8 as f64),
            _ => None,
        }
    }

    pub fn is_number(&self) -> bool {
        matches!(self, Obj::Int(_) | Obj::Bool(_) | Obj::Float(_))
    }

    /// Python `==`.
    pub fn py_eq(&self, other: &Obj) -> bool {
        match (self, other) {
            (Obj::Float(a), Obj::Float(b)) => a == b,
            (Obj::Float(f), n) | (n, Obj::Float(f)) if n.is_number() => match n.as_bigint() {
                Some(i) => f.is_finite() && f.fract() == 0.0 && BigInt::from_f64(*f) == Some(i),
                None => false,
            },
            (a, b) if a.is_number() && b.is_number() => a.as_bigint() == b.as_bigint(),
            (Obj::None, Obj::None) => true,
            (Obj::Str(a), Obj::Str(b)) => a == b,
            (Obj::List(a), Obj::List(b)) => {
                Rc::ptr_eq(a, b) || seq_eq(&a.borrow(), &b.borrow())
            }
            (Obj::Tuple(a), Obj::Tuple(b)) => seq_eq(a, b),
            (Obj::Set(a), Obj::Set(b)) => {
                let (a, b) = (a.borrow(), b.borrow());
                a.len() == b.len() && a.iter().all(|k| b.contains(k))
            }
            (Obj::Map(a), Obj::Map(b)) => {
                if Rc::ptr_eq(a, b) {
                    return true;
                }
                let (a, b) = (a.borrow(), b.borrow());
                a.len() == b.len()
                    && a.iter().all(|(k, v)| b.get(k).is_some_and(|w| v.py_eq(w)))
            }
            (Obj::Range(a), Obj::Range(b)) => {
                let (la, lb) = (a.len(), b.len());
                la == lb && (la == 0 || (a.start == b.start && (la == 1 || a.step == b.step)))
            }
            (Obj::Func(a), Obj::Func(b)) => Rc::ptr_eq(a, b),
            (Obj::Builtin(a), Obj::Builtin(b)) => a == b,
            (Obj::Exc(a), Obj::Exc(b)) => Rc::ptr_eq(a, b),
            (Obj::Iter(a), Obj::Iter(b)) => Rc::ptr_eq(a, b),
            _ => false,
        }
    }

    /// Python `is`, approximated: identity for heap objects, value equality
    /// for immutable scalars.
    pub fn is_same(&self, other: &Obj) -> bool {
        match (self, other) {
            (Obj::None, Obj::None) => true,
            (Obj::Bool(a), Obj::Bool(b)) => a == b,
            (Obj::Int(a), Obj::Int(b)) => a == b,
            (Obj::Str(a), Obj::Str(b)) => a == b,
            (Obj::List(a), Obj::List(b)) => Rc::ptr_eq(a, b),
            (Obj::Set(a), Obj::Set(b)) => Rc::ptr_eq(a, b),
            (Obj::Map(a), Obj::Map(b)) => Rc::ptr_eq(a, b),
            (Obj::Tuple(a), Obj::Tuple(b)) => Rc::ptr_eq(a, b),
            (Obj::Builtin(a), Obj::Builtin(b)) => a == b,
            (a, b) => a.py_eq(b) && !a.is_number(),
        }
    }

    pub fn repr(&self) -> String {
        self.freeze().repr()
    }

    pub fn to_display(&self) -> String {
        match self {
            Obj::Str(s) => s.to_string(),
            Obj::Exc(e) => e.message(),
            other => other.repr(),
        }
    }

    /// Snapshot into an immutable [`Value`].
    pub fn freeze(&self) -> Value {
        let mut seen = Vec::new();
        self.freeze_inner(&mut seen)
    }

    fn freeze_inner(&self, seen: &mut Vec<usize>) -> Value {
        match self {
            Obj::None => Value::None,
            Obj::Bool(b) => Value::Bool(*b),
            Obj::Int(i) => Value::Int(i.clone()),
            Obj::Float(f) => Value::Float(*f),
            Obj::Str(s) => Value::Str(s.to_string()),
            Obj::List(l) => {
                let ptr = Rc::as_ptr(l) as usize;
                if seen.contains(&ptr) {
                    return Value::Opaque("[...]".into());
                }
                seen.push(ptr);
                let v = Value::List(l.borrow().iter().map(|o| o.freeze_inner(seen)).collect());
                seen.pop();
                v
            }
            Obj::Tuple(t) => Value::Tuple(t.iter().map(|o| o.freeze_inner(seen)).collect()),
            Obj::Set(s) => Value::Set(s.borrow().iter().map(|k| k.0.freeze_inner(seen)).collect()),
            Obj::Map(m) => {
                let ptr = Rc::as_ptr(m) as usize;
                if seen.contains(&ptr) {
                    return Value::Opaque("{...}".into());
                }
                seen.push(ptr);
                let v = Value::Map(
                    m.borrow()
                        .iter()
                        .map(|(k, v)| (k.0.freeze_inner(seen), v.freeze_inner(seen)))
                        .collect(),
                );
                seen.pop();
                v
            }
            Obj::Func(f) => Value::Func(f.qualname.clone()),
            Obj::Builtin(n) if is_type_name(n) => Value::Opaque(format!("<class '{n}'>")),
            Obj::Builtin(n) => Value::Opaque(format!("<built-in function {n}>")),
            Obj::Method(m) => Value::Opaque(match &m.recv {
                Some(r) => format!("<built-in method {} of {} object>", m.name, r.type_name()),
                None => format!("<method '{}' of '{}' objects>", m.name, m.type_name),
            }),
            Obj::Iter(_) => Value::Opaque(format!("<{} object>", self.type_name())),
            Obj::Range(r) => Value::Opaque(r.repr()),
            Obj::View(kind, m) => {
                let m = m.borrow();
                let items: Vec<Value> = match kind {
                    ViewKind::Keys => m.keys().map(|k| k.0.freeze_inner(seen)).collect(),
                    ViewKind::Values => m.values().map(|v| v.freeze_inner(seen)).collect(),
                    ViewKind::Items => m
                        .iter()
                        .map(|(k, v)| Value::Tuple(vec![k.0.freeze_inner(seen), v.freeze_inner(seen)]))
                        .collect(),
                };
                Value::Opaque(format!("{}({})", self.type_name(), Value::List(items).repr()))
            }
            Obj::Exc(e) => {
                let args: Vec<String> = e.args.iter().map(|a| a.freeze_inner(seen).repr()).collect();
                Value::Opaque(format!("{}({})", e.kind, args.join(", ")))
            }
        }
    }

    /// Builds a runtime object from a frozen value (used for call arguments).
    pub fn thaw(v: &Value) -> Obj {
        match v {
            Value::None => Obj::None,
            Value::Bool(b) => Obj::Bool(*b),
            Value::Int(i) => Obj::Int(i.clone()),
            Value::Float(f) => Obj::Float(*f),
            Value::Str(s) => Obj::str(s),
            Value::List(items) => Obj::list(items.iter().map(Obj::thaw).collect()),
            Value::Tuple(items) => Obj::tuple(items.iter().map(Obj::thaw).collect()),
            Value::Set(items) => Obj::Set(Rc::new(RefCell::new(
                items.iter().map(|i| Key(Obj::thaw(i))).collect(),
            ))),
            Value::Map(entries) => Obj::Map(Rc::new(RefCell::new(
                entries.iter().map(|(k, v)| (Key(Obj::thaw(k)), Obj::thaw(v))).collect(),
            ))),
            Value::Func(name) | Value::Opaque(name) => Obj::str(name),
        }
    }
}

fn seq_eq(a: &[Obj], b: &[Obj]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.py_eq(y))
}

pub(crate) const TYPE_NAMES: &[&str] = &[
    "int", "float", "str", "bool", "list", "tuple", "set", "dict", "range", "type", "object",
];

pub(crate) const EXCEPTION_NAMES: &[&str] = &[
    "Exception", "ValueError", "IndexError", "KeyError", "TypeError", "ZeroDivisionError",
    "RuntimeError", "AssertionError", "AttributeError", "NameError", "StopIteration",
    "RecursionError", "OverflowError", "NotImplementedError", "ArithmeticError", "LookupError",
    "UnboundLocalError",
];

pub(crate) fn is_type_name(n: &str) -> bool {
    TYPE_NAMES.contains(&n) || EXCEPTION_NAMES.contains(&n)
}

/// Exception class hierarchy, enough for `isinstance` checks.
pub(crate) fn exception_is_a(kind: &str, base: &str) -> bool {
    if kind == base || base == "Exception" {
        return true;
    }
    matches!(
        (kind, base),
        ("IndexError" | "KeyError", "LookupError")
            | ("ZeroDivisionError" | "OverflowError", "ArithmeticError")
            | ("RecursionError" | "NotImplementedError", "RuntimeError")
            | ("UnboundLocalError", "NameError")
    )
}

/// Non-local exit from evaluation.
pub(crate) enum Unwind {
    /// A Python exception propagating (always an `Obj::Exc`).
    Exc(Obj),
    /// The step ceiling was reached.
    Halt,
}

impl std::fmt::Debug for Unwind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Unwind::Exc(e) => write!(f, "Exc({})", e.repr()),
            Unwind::Halt => f.write_str("Halt"),
        }
    }
}

pub(crate) type R<T> = Result<T, Unwind>;

pub(crate) fn raise<T>(kind: &str, msg: impl Into<String>) -> R<T> {
    Err(Unwind::Exc(Obj::exc(kind, msg)))
}

pub(crate) fn type_error<T>(msg: impl Into<String>) -> R<T> {
    raise("TypeError", msg)
}

pub(crate) fn key_of(o: &Obj) -> R<Key> {
    if o.is_hashable() {
        Ok(Key(o.clone()))
    } else {
        type_error(format!("unhashable type: '{}'", o.type_name()))
    }
}

pub(crate) fn new_set(items: impl IntoIterator<Item = Key>) -> Obj {
    Obj::Set(Rc::new(RefCell::new(items.into_iter().collect())))
}

pub(crate) fn new_map(items: impl IntoIterator<Item = (Key, Obj)>) -> Obj {
    Obj::Map(Rc::new(RefCell::new(items.into_iter().collect())))
}
