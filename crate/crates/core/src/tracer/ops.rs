//! Operators, comparisons, indexing and slicing with Python semantics.

use std::cmp::Ordering;
use std::rc::Rc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::minipy::ast::{BinOp, CmpOp, UnaryOp};

use super::obj::*;

fn unsupported<T>(op: &str, a: &Obj, b: &Obj) -> R<T> {
    type_error(format!(
        "unsupported operand type(s) for {op}: '{}' and '{}'",
        a.type_name(),
        b.type_name()
    ))
}

fn int_result(i: BigInt) -> Obj {
    Obj::Int(i)
}

pub(crate) fn float_floordiv_mod(a: f64, b: f64) -> (f64, f64) {
    let mut m = a % b;
    let mut div = (a - m) / b;
    if m != 0.0 {
        if (b < 0.0) != (m < 0.0) {
            m += b;
            div -= 1.0;
        }
    } else {
        m = 0.0f64.copysign(b);
    }
    let floordiv = if div != 0.0 {
        let mut f = div.floor();
        if div - f > 0.5 {
            f += 1.0;
        }
        f
    } else {
        0.0f64.copysign(a / b)
    };
    (floordiv, m)
}

fn repeat_count(n: &Obj) -> Option<usize> {
    n.as_bigint().map(|i| if i.is_negative() { 0 } else { i.to_usize().unwrap_or(usize::MAX) })
}

const MAX_SEQ: usize = 50_000_000;

fn check_size(n: usize, unit: usize) -> R<()> {
    if n.saturating_mul(unit.max(1)) > MAX_SEQ {
        raise("MemoryError", "")
    } else {
        Ok(())
    }
}

pub(crate) fn binop(op: BinOp, a: &Obj, b: &Obj) -> R<Obj> {
    use Obj::*;
    let sym = op.symbol();
    // Integer arithmetic (bools promote to int).
    if let (Some(x), Some(y)) = (int_like(a), int_like(b)) {
        return int_binop(op, a, b, x, y);
    }
    if a.is_number() && b.is_number() {
        let (x, y) = (a.as_f64().unwrap(), b.as_f64().unwrap());
        return float_binop(op, a, b, x, y);
    }
    match (op, a, b) {
        (BinOp::Add, Str(x), Str(y)) => {
            let mut s = String::with_capacity(x.len() + y.len());
            s.push_str(x);
            s.push_str(y);
            Ok(Obj::str(&s))
        }
        (BinOp::Add, List(x), List(y)) => {
            let mut v = x.borrow().clone();
            v.extend(y.borrow().iter().cloned());
            Ok(Obj::list(v))
        }
        (BinOp::Add, Tuple(x), Tuple(y)) => {
            Ok(Obj::tuple(x.iter().chain(y.iter()).cloned().collect()))
        }
        (BinOp::Add, Str(_), _) => type_error(format!(
            "can only concatenate str (not \"{}\") to str",
            b.type_name()
        )),
        (BinOp::Add, List(_), _) => type_error(format!(
            "can only concatenate list (not \"{}\") to list",
            b.type_name()
        )),
        (BinOp::Add, Tuple(_), _) => type_error(format!(
            "can only concatenate tuple (not \"{}\") to tuple",
            b.type_name()
        )),
        (BinOp::Mul, Str(s), n) | (BinOp::Mul, n, Str(s)) if int_like(n).is_some() => {
            let k = repeat_count(n).unwrap();
            check_size(k, s.len())?;
            Ok(Obj::str(&s.repeat(k)))
        }
        (BinOp::Mul, List(l), n) | (BinOp::Mul, n, List(l)) if int_like(n).is_some() => {
            let k = repeat_count(n).unwrap();
            let items = l.borrow();
            check_size(k, items.len())?;
            let mut v = Vec::with_capacity(items.len() * k);
            for _ in 0..k {
                v.extend(items.iter().cloned());
            }
            Ok(Obj::list(v))
        }
        (BinOp::Mul, Tuple(t), n) | (BinOp::Mul, n, Tuple(t)) if int_like(n).is_some() => {
            let k = repeat_count(n).unwrap();
            check_size(k, t.len())?;
            let mut v = Vec::with_capacity(t.len() * k);
            for _ in 0..k {
                v.extend(t.iter().cloned());
            }
            Ok(Obj::tuple(v))
        }
        (BinOp::Sub, Set(x), Set(y)) => {
            let y = y.borrow();
            Ok(new_set(x.borrow().iter().filter(|k| !y.contains(*k)).cloned()))
        }
        (BinOp::BitOr, Set(x), Set(y)) => {
            let mut out = x.borrow().clone();
            out.extend(y.borrow().iter().cloned());
            Ok(Obj::Set(Rc::new(std::cell::RefCell::new(out))))
        }
        (BinOp::BitAnd, Set(x), Set(y)) => {
            let y = y.borrow();
            Ok(new_set(x.borrow().iter().filter(|k| y.contains(*k)).cloned()))
        }
        (BinOp::BitXor, Set(x), Set(y)) => {
            let (x, y) = (x.borrow(), y.borrow());
            let left = x.iter().filter(|k| !y.contains(*k));
            let right = y.iter().filter(|k| !x.contains(*k));
            Ok(new_set(left.chain(right).cloned()))
        }
        (BinOp::BitOr, Map(x), Map(y)) => {
            let mut out = x.borrow().clone();
            for (k, v) in y.borrow().iter() {
                out.insert(k.clone(), v.clone());
            }
            Ok(Obj::Map(Rc::new(std::cell::RefCell::new(out))))
        }
        (BinOp::Mod, Str(fmt), arg) => super::format::percent_format(fmt, arg),
        _ => unsupported(sym, a, b),
    }
}

fn int_like(o: &Obj) -> Option<BigInt> {
    match o {
        Obj::Int(i) => Some(i.clone()),
        Obj::Bool(b) => Some(BigInt::from(*b as u8)),
        _ => None,
    }
}

fn int_binop(op: BinOp, a: &Obj, b: &Obj, x: BigInt, y: BigInt) -> R<Obj> {
    let both_bool = matches!((a, b), (Obj::Bool(_), Obj::Bool(_)));
    Ok(match op {
        BinOp::Add => int_result(x + y),
        BinOp::Sub => int_result(x - y),
        BinOp::Mul => {
            if x.bits() + y.bits() > 4_000_000 {
                return raise("MemoryError", "");
            }
            int_result(x * y)
        }
        BinOp::Div => {
            if y.is_zero() {
                return raise("ZeroDivisionError", "division by zero");
            }
            match (x.to_f64(), y.to_f64()) {
                (Some(fx), Some(fy)) if fx.abs() < 9.0e15 && fy.abs() < 9.0e15 => Obj::Float(fx / fy),
                _ => Obj::Float(big_true_div(&x, &y)),
            }
        }
        BinOp::FloorDiv => {
            if y.is_zero() {
                return raise("ZeroDivisionError", "integer division or modulo by zero");
            }
            int_result(x.div_floor(&y))
        }
        BinOp::Mod => {
            if y.is_zero() {
                return raise("ZeroDivisionError", "integer modulo by zero");
            }
            int_result(x.mod_floor(&y))
        }
        BinOp::Pow => {
            if y.is_negative() {
                if x.is_zero() {
                    return raise("ZeroDivisionError", "0.0 cannot be raised to a negative power");
                }
                let (fx, fy) = (x.to_f64().unwrap_or(f64::INFINITY), y.to_f64().unwrap_or(f64::NEG_INFINITY));
                Obj::Float(fx.powf(fy))
            } else {
                let e = y.to_u64().unwrap_or(u64::MAX);
                let trivial = x.is_zero() || x.abs() == BigInt::from(1);
                if !trivial && x.bits().saturating_mul(e) > 4_000_000 {
                    return raise("MemoryError", "");
                }
                if trivial {
                    if x.is_zero() {
                        int_result(if e == 0 { BigInt::from(1) } else { BigInt::zero() })
                    } else if x.is_negative() && e % 2 == 1 {
                        int_result(BigInt::from(-1))
                    } else {
                        int_result(BigInt::from(1))
                    }
                } else {
                    int_result(num_traits::pow::pow(x, e as usize))
                }
            }
        }
        BinOp::BitAnd if both_bool => Obj::Bool(!(&x & &y).is_zero()),
        BinOp::BitOr if both_bool => Obj::Bool(!(&x | &y).is_zero()),
        BinOp::BitXor if both_bool => Obj::Bool(!(&x ^ &y).is_zero()),
        BinOp::BitAnd => int_result(x & y),
        BinOp::BitOr => int_result(x | y),
        BinOp::BitXor => int_result(x ^ y),
        BinOp::LShift | BinOp::RShift => {
            if y.is_negative() {
                return raise("ValueError", "negative shift count");
            }
            let n = y.to_usize().unwrap_or(usize::MAX);
            if op == BinOp::LShift {
                if !x.is_zero() && (x.bits() as usize).saturating_add(n) > 4_000_000 {
                    return raise("MemoryError", "");
                }
                int_result(x << n)
            } else if n as u64 >= x.bits() + 1 {
                int_result(if x.is_negative() { BigInt::from(-1) } else { BigInt::zero() })
            } else {
                int_result(x >> n)
            }
        }
    })
}

fn big_true_div(x: &BigInt, y: &BigInt) -> f64 {
    // Scale so the quotient keeps ~64 significant bits, then correct the exponent.
    let shift = 64i64 - (x.bits() as i64 - y.bits() as i64);
    let q = if shift >= 0 { (x << shift as usize) / y } else { x / (y << (-shift) as usize) };
    q.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-shift as i32)
}

fn float_binop(op: BinOp, a: &Obj, b: &Obj, x: f64, y: f64) -> R<Obj> {
    Ok(Obj::Float(match op {
        BinOp::Add => x + y,
        BinOp::Sub => x - y,
        BinOp::Mul => x * y,
        BinOp::Div => {
            if y == 0.0 {
                return raise("ZeroDivisionError", "float division by zero");
            }
            x / y
        }
        BinOp::FloorDiv => {
            if y == 0.0 {
                return raise("ZeroDivisionError", "float floor division by zero");
            }
            float_floordiv_mod(x, y).0
        }
        BinOp::Mod => {
            if y == 0.0 {
                return raise("ZeroDivisionError", "float modulo");
            }
            float_floordiv_mod(x, y).1
        }
        BinOp::Pow => {
            if x == 0.0 && y < 0.0 {
                return raise("ZeroDivisionError", "0.0 cannot be raised to a negative power");
            }
            if x < 0.0 && y.fract() != 0.0 {
                return raise("ValueError", "math domain error");
            }
            let r = x.powf(y);
            if r.is_infinite() && x.is_finite() && y.is_finite() {
                return raise("OverflowError", "(34, 'Numerical result out of range')");
            }
            r
        }
        _ => return unsupported(op.symbol(), a, b),
    }))
}

pub(crate) fn unary(op: UnaryOp, v: &Obj) -> R<Obj> {
    match op {
        UnaryOp::Not => Ok(Obj::Bool(!v.truthy())),
        UnaryOp::Neg => match v {
            Obj::Float(f) => Ok(Obj::Float(-f)),
            o => match int_like(o) {
                Some(i) => Ok(Obj::Int(-i)),
                None => type_error(format!("bad operand type for unary -: '{}'", o.type_name())),
            },
        },
        UnaryOp::Pos => match v {
            Obj::Float(f) => Ok(Obj::Float(*f)),
            o => match int_like(o) {
                Some(i) => Ok(Obj::Int(i)),
                None => type_error(format!("bad operand type for unary +: '{}'", o.type_name())),
            },
        },
        UnaryOp::Invert => match int_like(v) {
            Some(i) => Ok(Obj::Int(-i - 1)),
            None => type_error(format!("bad operand type for unary ~: '{}'", v.type_name())),
        },
    }
}

/// Three-way comparison for `<`-style operators. `Ok(None)` means
/// unordered (NaN).
pub(crate) fn py_cmp(a: &Obj, b: &Obj, sym: &str) -> R<Option<Ordering>> {
    if let (Some(x), Some(y)) = (int_like(a), int_like(b)) {
        return Ok(Some(x.cmp(&y)));
    }
    if a.is_number() && b.is_number() {
        return Ok(cmp_num(a, b));
    }
    match (a, b) {
        (Obj::Str(x), Obj::Str(y)) => Ok(Some(x.cmp(y))),
        (Obj::List(x), Obj::List(y)) => {
            let (x, y) = (x.borrow().clone(), y.borrow().clone());
            seq_cmp(&x, &y, sym)
        }
        (Obj::Tuple(x), Obj::Tuple(y)) => seq_cmp(x, y, sym),
        _ => type_error(format!(
            "'{sym}' not supported between instances of '{}' and '{}'",
            a.type_name(),
            b.type_name()
        )),
    }
}

fn cmp_num(a: &Obj, b: &Obj) -> Option<Ordering> {
    match (a, b) {
        (Obj::Float(x), Obj::Float(y)) => x.partial_cmp(y),
        (Obj::Float(f), n) => cmp_float_int(*f, &int_like(n)?),
        (n, Obj::Float(f)) => cmp_float_int(*f, &int_like(n)?).map(Ordering::reverse),
        _ => None,
    }
}

fn cmp_float_int(f: f64, i: &BigInt) -> Option<Ordering> {
    if f.is_nan() {
        return None;
    }
    if f.is_infinite() {
        return Some(if f > 0.0 { Ordering::Greater } else { Ordering::Less });
    }
    let fl = num_traits::FromPrimitive::from_f64(f.floor()).unwrap_or_else(BigInt::zero);
    match fl.cmp(i) {
        Ordering::Equal if f.fract() != 0.0 => Some(Ordering::Greater),
        o => Some(o),
    }
}

fn seq_cmp(x: &[Obj], y: &[Obj], sym: &str) -> R<Option<Ordering>> {
    for (a, b) in x.iter().zip(y) {
        if !a.py_eq(b) {
            return py_cmp(a, b, sym);
        }
    }
    Ok(Some(x.len().cmp(&y.len())))
}

pub(crate) fn compare(op: CmpOp, a: &Obj, b: &Obj) -> R<bool> {
    Ok(match op {
        CmpOp::Eq => a.py_eq(b),
        CmpOp::NotEq => !a.py_eq(b),
        CmpOp::Is => a.is_same(b),
        CmpOp::IsNot => !a.is_same(b),
        CmpOp::In => contains(b, a)?,
        CmpOp::NotIn => !contains(b, a)?,
        CmpOp::Lt | CmpOp::LtE | CmpOp::Gt | CmpOp::GtE => {
            if let (Obj::Set(x), Obj::Set(y)) = (a, b) {
                let (x, y) = (x.borrow(), y.borrow());
                let sub = x.iter().all(|k| y.contains(k));
                let sup = y.iter().all(|k| x.contains(k));
                return Ok(match op {
                    CmpOp::Lt => sub && x.len() < y.len(),
                    CmpOp::LtE => sub,
                    CmpOp::Gt => sup && x.len() > y.len(),
                    _ => sup,
                });
            }
            let ord = py_cmp(a, b, op.symbol())?;
            match (op, ord) {
                (_, None) => false,
                (CmpOp::Lt, Some(o)) => o == Ordering::Less,
                (CmpOp::LtE, Some(o)) => o != Ordering::Greater,
                (CmpOp::Gt, Some(o)) => o == Ordering::Greater,
                (_, Some(o)) => o != Ordering::Less,
            }
        }
    })
}

pub(crate) fn contains(container: &Obj, item: &Obj) -> R<bool> {
    match container {
        Obj::Str(s) => match item {
            Obj::Str(sub) => Ok(s.contains(&**sub)),
            _ => type_error(format!(
                "'in <string>' requires string as left operand, not {}",
                item.type_name()
            )),
        },
        Obj::List(l) => Ok(l.borrow().iter().any(|x| x.py_eq(item))),
        Obj::Tuple(t) => Ok(t.iter().any(|x| x.py_eq(item))),
        Obj::Set(s) => Ok(s.borrow().contains(&key_of(item)?)),
        Obj::Map(m) | Obj::View(ViewKind::Keys, m) => Ok(m.borrow().contains_key(&key_of(item)?)),
        Obj::View(ViewKind::Values, m) => Ok(m.borrow().values().any(|v| v.py_eq(item))),
        Obj::View(ViewKind::Items, m) => Ok(match item {
            Obj::Tuple(t) if t.len() == 2 => match key_of(&t[0]) {
                Ok(k) => m.borrow().get(&k).is_some_and(|v| v.py_eq(&t[1])),
                Err(_) => false,
            },
            _ => false,
        }),
        Obj::Range(r) => Ok(match item.as_bigint().and_then(|i| i.to_i64()) {
            Some(i) if item.is_number() || matches!(item, Obj::Bool(_)) => {
                let in_span = if r.step > 0 { i >= r.start && i < r.stop } else { i <= r.start && i > r.stop };
                in_span && (i - r.start) % r.step == 0
            }
            _ => match item {
                Obj::Float(f) if f.fract() == 0.0 => contains(container, &Obj::int(*f as i64))?,
                _ => false,
            },
        }),
        Obj::Iter(it) => {
            let mut it = it.borrow_mut();
            while let Some(x) = next_plain(&mut it)? {
                if x.py_eq(item) {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        _ => type_error(format!("argument of type '{}' is not iterable", container.type_name())),
    }
}

/// Advances an iterator that needs no interpreter callbacks.
pub(crate) fn next_plain(it: &mut IterState) -> R<Option<Obj>> {
    Ok(match it {
        IterState::List { list, idx } => {
            let l = list.borrow();
            if *idx < l.len() {
                *idx += 1;
                Some(l[*idx - 1].clone())
            } else {
                *idx = usize::MAX / 2;
                None
            }
        }
        IterState::Items { items, idx } | IterState::Named { items, idx, .. } => {
            if *idx < items.len() {
                *idx += 1;
                Some(items[*idx - 1].clone())
            } else {
                None
            }
        }
        IterState::Range { cur, stop, step } => {
            if (*step > 0 && *cur < *stop) || (*step < 0 && *cur > *stop) {
                let v = *cur;
                *cur += *step;
                Some(Obj::int(v))
            } else {
                None
            }
        }
        IterState::Sized { items, idx, watch } => {
            let (changed, what) = match watch {
                SizeWatch::Set(s, n) => (s.borrow().len() != *n, "Set"),
                SizeWatch::Map(m, n) => (m.borrow().len() != *n, "dictionary"),
            };
            if changed {
                return raise("RuntimeError", format!("{what} changed size during iteration"));
            }
            if *idx < items.len() {
                *idx += 1;
                Some(items[*idx - 1].clone())
            } else {
                None
            }
        }
    })
}

/// Iterator over any iterable object.
pub(crate) fn iter_of(o: &Obj) -> R<Rc<std::cell::RefCell<IterState>>> {
    use std::cell::RefCell;
    let st = match o {
        Obj::Iter(it) => return Ok(it.clone()),
        Obj::List(l) => IterState::List { list: l.clone(), idx: 0 },
        Obj::Tuple(t) => IterState::Items { items: t.to_vec(), idx: 0 },
        Obj::Str(s) => IterState::Items {
            items: s.chars().map(|c| Obj::str(c.encode_utf8(&mut [0; 4]))).collect(),
            idx: 0,
        },
        Obj::Range(r) => IterState::Range { cur: r.start, stop: r.stop, step: r.step },
        Obj::Set(s) => {
            let b = s.borrow();
            IterState::Sized {
                items: b.iter().map(|k| k.0.clone()).collect(),
                idx: 0,
                watch: SizeWatch::Set(s.clone(), b.len()),
            }
        }
        Obj::Map(m) | Obj::View(ViewKind::Keys, m) => {
            let b = m.borrow();
            IterState::Sized {
                items: b.keys().map(|k| k.0.clone()).collect(),
                idx: 0,
                watch: SizeWatch::Map(m.clone(), b.len()),
            }
        }
        Obj::View(ViewKind::Values, m) => {
            let b = m.borrow();
            IterState::Sized {
                items: b.values().cloned().collect(),
                idx: 0,
                watch: SizeWatch::Map(m.clone(), b.len()),
            }
        }
        Obj::View(ViewKind::Items, m) => {
            let b = m.borrow();
            IterState::Sized {
                items: b.iter().map(|(k, v)| Obj::tuple(vec![k.0.clone(), v.clone()])).collect(),
                idx: 0,
                watch: SizeWatch::Map(m.clone(), b.len()),
            }
        }
        _ => return type_error(format!("'{}' object is not iterable", o.type_name())),
    };
    Ok(Rc::new(RefCell::new(st)))
}

/// Materializes an iterable.
pub(crate) fn collect(o: &Obj) -> R<Vec<Obj>> {
    match o {
        Obj::List(l) => Ok(l.borrow().clone()),
        Obj::Tuple(t) => Ok(t.to_vec()),
        _ => {
            let it = iter_of(o)?;
            let mut it = it.borrow_mut();
            let mut out = Vec::new();
            while let Some(x) = next_plain(&mut it)? {
                out.push(x);
                if out.len() > MAX_SEQ {
                    return raise("MemoryError", "");
                }
            }
            Ok(out)
        }
    }
}

pub(crate) fn len_of(o: &Obj) -> R<usize> {
    Ok(match o {
        Obj::Str(s) => s.chars().count(),
        Obj::List(l) => l.borrow().len(),
        Obj::Tuple(t) => t.len(),
        Obj::Set(s) => s.borrow().len(),
        Obj::Map(m) | Obj::View(_, m) => m.borrow().len(),
        Obj::Range(r) => r.len() as usize,
        _ => return type_error(format!("object of type '{}' has no len()", o.type_name())),
    })
}

fn index_value(idx: &Obj, what: &str) -> R<i64> {
    match idx {
        Obj::Int(_) | Obj::Bool(_) => match idx.as_i64() {
            Some(i) => Ok(i),
            None => raise("IndexError", "cannot fit 'int' into an index-sized integer"),
        },
        _ => type_error(format!(
            "{what} indices must be integers or slices, not {}",
            idx.type_name()
        )),
    }
}

fn norm_index(i: i64, len: usize, what: &str) -> R<usize> {
    let j = if i < 0 { i + len as i64 } else { i };
    if j < 0 || j >= len as i64 {
        raise("IndexError", format!("{what} index out of range"))
    } else {
        Ok(j as usize)
    }
}

pub(crate) fn getitem(o: &Obj, idx: &Obj) -> R<Obj> {
    match o {
        Obj::List(l) => {
            let i = index_value(idx, "list")?;
            let l = l.borrow();
            Ok(l[norm_index(i, l.len(), "list")?].clone())
        }
        Obj::Tuple(t) => {
            let i = index_value(idx, "tuple")?;
            Ok(t[norm_index(i, t.len(), "tuple")?].clone())
        }
        Obj::Str(s) => {
            let i = index_value(idx, "string")?;
            let n = s.chars().count();
            let j = norm_index(i, n, "string")?;
            let c = s.chars().nth(j).unwrap();
            Ok(Obj::str(c.encode_utf8(&mut [0; 4])))
        }
        Obj::Map(m) => {
            let k = key_of(idx)?;
            match m.borrow().get(&k) {
                Some(v) => Ok(v.clone()),
                None => Err(Unwind::Exc(Obj::Exc(Rc::new(ExcObj {
                    kind: "KeyError".into(),
                    args: vec![idx.clone()],
                })))),
            }
        }
        Obj::Range(r) => {
            let i = index_value(idx, "range")?;
            let j = norm_index(i, r.len() as usize, "range object")?;
            Ok(Obj::int(r.get(j as i64)))
        }
        _ => type_error(format!("'{}' object is not subscriptable", o.type_name())),
    }
}

fn slice_bound(b: &Option<Obj>) -> R<Option<i64>> {
    match b {
        None | Some(Obj::None) => Ok(None),
        Some(v @ (Obj::Int(_) | Obj::Bool(_))) => {
            let i = v.as_bigint().unwrap();
            Ok(Some(i.to_i64().unwrap_or(if i.is_negative() { i64::MIN / 2 } else { i64::MAX / 2 })))
        }
        Some(_) => type_error("slice indices must be integers or None or have an __index__ method"),
    }
}

/// Indices selected by `[lower:upper:step]` on a sequence of length `len`.
pub(crate) fn slice_indices(
    len: usize,
    lower: &Option<Obj>,
    upper: &Option<Obj>,
    step: &Option<Obj>,
) -> R<Vec<usize>> {
    let step = slice_bound(step)?.unwrap_or(1);
    if step == 0 {
        return raise("ValueError", "slice step cannot be zero");
    }
    let len = len as i64;
    let adjust = |v: Option<i64>, default: i64| -> i64 {
        match v {
            None => default,
            Some(mut v) => {
                if v < 0 {
                    v += len;
                    if v < 0 {
                        v = if step < 0 { -1 } else { 0 };
                    }
                } else if v >= len {
                    v = if step < 0 { len - 1 } else { len };
                }
                v
            }
        }
    };
    let (start, stop) = if step > 0 {
        (adjust(slice_bound(lower)?, 0), adjust(slice_bound(upper)?, len))
    } else {
        (adjust(slice_bound(lower)?, len - 1), adjust(slice_bound(upper)?, -1))
    };
    let mut out = Vec::new();
    let mut i = start;
    while (step > 0 && i < stop) || (step < 0 && i > stop) {
        out.push(i as usize);
        i += step;
    }
    Ok(out)
}

pub(crate) fn getslice(o: &Obj, lower: &Option<Obj>, upper: &Option<Obj>, step: &Option<Obj>) -> R<Obj> {
    match o {
        Obj::List(l) => {
            let l = l.borrow();
            let idx = slice_indices(l.len(), lower, upper, step)?;
            Ok(Obj::list(idx.into_iter().map(|i| l[i].clone()).collect()))
        }
        Obj::Tuple(t) => {
            let idx = slice_indices(t.len(), lower, upper, step)?;
            Ok(Obj::tuple(idx.into_iter().map(|i| t[i].clone()).collect()))
        }
        Obj::Str(s) => {
            let chars: Vec<char> = s.chars().collect();
            let idx = slice_indices(chars.len(), lower, upper, step)?;
            Ok(Obj::str(&idx.into_iter().map(|i| chars[i]).collect::<String>()))
        }
        Obj::Range(r) => {
            let idx = slice_indices(r.len() as usize, lower, upper, step)?;
            let items: Vec<Obj> = idx.into_iter().map(|i| Obj::int(r.get(i as i64))).collect();
            Ok(Obj::list(items))
        }
        Obj::Map(_) => type_error("unhashable type: 'slice'"),
        _ => type_error(format!("'{}' object is not subscriptable", o.type_name())),
    }
}

pub(crate) fn setitem(o: &Obj, idx: &Obj, v: Obj) -> R<()> {
    match o {
        Obj::List(l) => {
            let i = index_value(idx, "list")?;
            let mut l = l.borrow_mut();
            let n = l.len();
            let j = norm_index(i, n, "list assignment")?;
            l[j] = v;
            Ok(())
        }
        Obj::Map(m) => {
            let k = key_of(idx)?;
            m.borrow_mut().insert(k, v);
            Ok(())
        }
        _ => type_error(format!("'{}' object does not support item assignment", o.type_name())),
    }
}

pub(crate) fn setslice(
    o: &Obj,
    lower: &Option<Obj>,
    upper: &Option<Obj>,
    step: &Option<Obj>,
    items: Vec<Obj>,
) -> R<()> {
    let Obj::List(l) = o else {
        return type_error(format!("'{}' object does not support item assignment", o.type_name()));
    };
    let mut l = l.borrow_mut();
    let stepv = slice_bound(step)?.unwrap_or(1);
    if stepv == 1 {
        let len = l.len() as i64;
        let clamp = |v: Option<i64>, d: i64| -> usize {
            match v {
                None => d as usize,
                Some(v) if v < 0 => (v + len).max(0) as usize,
                Some(v) => v.min(len) as usize,
            }
        };
        let start = clamp(slice_bound(lower)?, 0);
        let stop = clamp(slice_bound(upper)?, len).max(start);
        l.splice(start..stop, items);
        return Ok(());
    }
    let idx = slice_indices(l.len(), lower, upper, step)?;
    if idx.len() != items.len() {
        return raise(
            "ValueError",
            format!(
                "attempt to assign sequence of size {} to extended slice of size {}",
                items.len(),
                idx.len()
            ),
        );
    }
    for (i, v) in idx.into_iter().zip(items) {
        l[i] = v;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i(v: i64) -> Obj {
        Obj::int(v)
    }

    fn show(r: R<Obj>) -> String {
        match r {
            Ok(o) => o.repr(),
            Err(Unwind::Exc(e)) => format!("raise {}", e.repr()),
            Err(Unwind::Halt) => "halt".into(),
        }
    }

    #[test]
    fn floor_division_and_modulo() {
        assert_eq!(show(binop(BinOp::FloorDiv, &i(-7), &i(2))), "-4");
        assert_eq!(show(binop(BinOp::Mod, &i(-7), &i(2))), "1");
        assert_eq!(show(binop(BinOp::Mod, &i(7), &i(-2))), "-1");
        assert_eq!(show(binop(BinOp::Mod, &Obj::Float(-7.5), &i(2))), "0.5");
        assert_eq!(show(binop(BinOp::FloorDiv, &Obj::Float(7.0), &Obj::Float(-2.0))), "-4.0");
        assert_eq!(show(binop(BinOp::Div, &i(7), &i(2))), "3.5");
        assert_eq!(show(binop(BinOp::Div, &i(1), &i(0))), "raise ZeroDivisionError('division by zero')");
    }

    #[test]
    fn shifts_round_down() {
        assert_eq!(show(binop(BinOp::RShift, &i(-5), &i(1))), "-3");
        assert_eq!(show(binop(BinOp::RShift, &i(-1), &i(100))), "-1");
        assert_eq!(show(binop(BinOp::LShift, &i(3), &i(4))), "48");
        assert_eq!(show(binop(BinOp::BitAnd, &Obj::Bool(true), &Obj::Bool(false))), "False");
        assert_eq!(show(binop(BinOp::BitXor, &i(-6), &i(3))), "-7");
        assert_eq!(show(unary(UnaryOp::Invert, &i(5))), "-6");
    }

    #[test]
    fn powers() {
        assert_eq!(show(binop(BinOp::Pow, &i(2), &i(100))), "1267650600228229401496703205376");
        assert_eq!(show(binop(BinOp::Pow, &i(2), &i(-1))), "0.5");
        assert_eq!(show(binop(BinOp::Pow, &i(-1), &i(3))), "-1");
    }

    #[test]
    fn sequences() {
        let s = Obj::str("abc");
        assert_eq!(show(binop(BinOp::Mul, &s, &i(2))), "'abcabc'");
        assert_eq!(show(binop(BinOp::Mul, &i(-1), &s)), "''");
        assert_eq!(
            show(binop(BinOp::Add, &s, &i(1))),
            "raise TypeError('can only concatenate str (not \"int\") to str')"
        );
        assert_eq!(show(getitem(&s, &i(-1))), "'c'");
        assert_eq!(show(getitem(&s, &i(3))), "raise IndexError('string index out of range')");
        assert_eq!(show(getslice(&s, &None, &None, &Some(i(-1)))), "'cba'");
        assert_eq!(show(getslice(&s, &Some(i(-10)), &Some(i(2)), &None)), "'ab'");
    }

    #[test]
    fn comparisons() {
        assert!(compare(CmpOp::Lt, &i(1), &Obj::Float(1.5)).unwrap());
        assert!(compare(CmpOp::Eq, &i(1), &Obj::Float(1.0)).unwrap());
        let a = Obj::list(vec![i(1), i(2)]);
        let b = Obj::list(vec![i(1), i(3)]);
        assert!(compare(CmpOp::Lt, &a, &b).unwrap());
        assert!(compare(CmpOp::In, &Obj::str("b"), &Obj::str("abc")).unwrap());
        assert!(matches!(compare(CmpOp::Lt, &i(1), &Obj::str("a")), Err(Unwind::Exc(_))));
    }

    #[test]
    fn set_algebra_keeps_left_order() {
        let a = new_set([Key(i(3)), Key(i(1)), Key(i(2))]);
        let b = new_set([Key(i(2)), Key(i(5))]);
        assert_eq!(show(binop(BinOp::BitOr, &a, &b)), "{3, 1, 2, 5}");
        assert_eq!(show(binop(BinOp::Sub, &a, &b)), "{3, 1}");
        assert_eq!(show(binop(BinOp::BitAnd, &a, &b)), "{2}");
        assert_eq!(show(binop(BinOp::BitXor, &a, &b)), "{3, 1, 5}");
    }
}
