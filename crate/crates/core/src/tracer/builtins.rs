//! Builtin functions and type constructors.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::rc::Rc;

use indexmap::{IndexMap, IndexSet};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use super::format::format_obj;
use super::interp::Interp;
use super::obj::*;
use super::ops;
use crate::minipy::ast::{BinOp, CmpOp};

const FUNCTIONS: &[&str] = &[
    "len", "range", "print", "abs", "chr", "ord", "sorted", "reversed", "enumerate", "zip", "sum",
    "min", "max", "any", "all", "map", "filter", "round", "pow", "divmod", "repr", "isinstance",
    "format", "hex", "bin", "oct", "iter", "next", "hash",
];

pub(crate) fn lookup(name: &str) -> Option<Obj> {
    FUNCTIONS
        .iter()
        .chain(TYPE_NAMES)
        .chain(EXCEPTION_NAMES)
        .find(|n| **n == name)
        .map(|n| Obj::Builtin(n))
}

type Kwargs = Vec<(String, Obj)>;

fn arity(name: &str, args: &[Obj], min: usize, max: usize) -> R<()> {
    let n = args.len();
    if n < min {
        if min == max {
            return type_error(format!("{name}() takes exactly {} argument{} ({n} given)", min, plural(min)));
        }
        return type_error(format!("{name} expected at least {min} argument{}, got {n}", plural(min)));
    }
    if n > max {
        if min == max {
            return type_error(format!("{name}() takes exactly {} argument{} ({n} given)", max, plural(max)));
        }
        return type_error(format!("{name} expected at most {max} argument{}, got {n}", plural(max)));
    }
    Ok(())
}

fn plural(n: usize) -> &'static str {
    if n == 1 {
        ""
    } else {
        "s"
    }
}

fn no_kwargs(name: &str, kwargs: &Kwargs) -> R<()> {
    match kwargs.first() {
        Some((k, _)) => type_error(format!("{name}() got an unexpected keyword argument '{k}'")),
        None => Ok(()),
    }
}

fn take_kw(kwargs: &mut Kwargs, name: &str) -> Option<Obj> {
    let pos = kwargs.iter().position(|(k, _)| k == name)?;
    Some(kwargs.remove(pos).1)
}

fn index_arg(o: &Obj) -> R<BigInt> {
    match o.as_bigint() {
        Some(i) => Ok(i),
        None => type_error(format!("'{}' object cannot be interpreted as an integer", o.type_name())),
    }
}

fn named_iter(label: &'static str, items: Vec<Obj>) -> Obj {
    Obj::Iter(Rc::new(RefCell::new(IterState::Named { label, items, idx: 0 })))
}

pub(crate) fn call(it: &mut Interp, name: &'static str, mut args: Vec<Obj>, mut kwargs: Kwargs) -> R<Obj> {
    if EXCEPTION_NAMES.contains(&name) {
        no_kwargs(name, &kwargs)?;
        return Ok(Obj::Exc(Rc::new(ExcObj { kind: name.to_string(), args })));
    }
    match name {
        "print" => {
            let sep = match take_kw(&mut kwargs, "sep") {
                Some(Obj::None) | None => " ".to_string(),
                Some(Obj::Str(s)) => s.to_string(),
                Some(o) => return type_error(format!("sep must be None or a string, not {}", o.type_name())),
            };
            let end = match take_kw(&mut kwargs, "end") {
                Some(Obj::None) | None => "\n".to_string(),
                Some(Obj::Str(s)) => s.to_string(),
                Some(o) => return type_error(format!("end must be None or a string, not {}", o.type_name())),
            };
            no_kwargs(name, &kwargs)?;
            let text: Vec<String> = args.iter().map(Obj::to_display).collect();
            let line = text.join(&sep) + &end;
            it.write_stdout(&line);
            Ok(Obj::None)
        }
        "sorted" => {
            let key = take_kw(&mut kwargs, "key");
            let reverse = take_kw(&mut kwargs, "reverse").is_some_and(|r| r.truthy());
            no_kwargs(name, &kwargs)?;
            arity(name, &args, 1, 1)?;
            let items = ops::collect(&args[0])?;
            Ok(Obj::list(sort_objs(it, items, key, reverse)?))
        }
        "min" | "max" => {
            let key = take_kw(&mut kwargs, "key").filter(|k| !matches!(k, Obj::None));
            let default = take_kw(&mut kwargs, "default");
            no_kwargs(name, &kwargs)?;
            if args.is_empty() {
                return type_error(format!("{name} expected at least 1 argument, got 0"));
            }
            let items = if args.len() == 1 { ops::collect(&args[0])? } else { args };
            if items.is_empty() {
                return match default {
                    Some(d) => Ok(d),
                    None => raise("ValueError", format!("{name}() iterable argument is empty")),
                };
            }
            let op = if name == "min" { CmpOp::Lt } else { CmpOp::Gt };
            let mut best = items[0].clone();
            let mut best_key = apply_key(it, &key, &best)?;
            for x in items.into_iter().skip(1) {
                let k = apply_key(it, &key, &x)?;
                if ops::compare(op, &k, &best_key)? {
                    best = x;
                    best_key = k;
                }
            }
            Ok(best)
        }
        "map" => {
            no_kwargs(name, &kwargs)?;
            if args.len() < 2 {
                return type_error("map() must have at least two arguments.");
            }
            let f = args.remove(0);
            let cols = args.iter().map(ops::collect).collect::<R<Vec<_>>>()?;
            let n = cols.iter().map(Vec::len).min().unwrap_or(0);
            let mut out = Vec::with_capacity(n);
            for i in 0..n {
                let row = cols.iter().map(|c| c[i].clone()).collect();
                out.push(it.call_value(f.clone(), row, Vec::new())?);
            }
            Ok(named_iter("map", out))
        }
        "filter" => {
            no_kwargs(name, &kwargs)?;
            arity(name, &args, 2, 2)?;
            let items = ops::collect(&args[1])?;
            let mut out = Vec::new();
            for x in items {
                let keep = match &args[0] {
                    Obj::None => x.truthy(),
                    f => it.call_value(f.clone(), vec![x.clone()], Vec::new())?.truthy(),
                };
                if keep {
                    out.push(x);
                }
            }
            Ok(named_iter("filter", out))
        }
        "int" => {
            let base = take_kw(&mut kwargs, "base");
            no_kwargs(name, &kwargs)?;
            arity(name, &args, 0, 2)?;
            let base = match (args.get(1).cloned(), base) {
                (Some(b), None) | (None, Some(b)) => Some(b),
                (None, None) => None,
                (Some(_), Some(_)) => return type_error("argument for int() given by name ('base') and position (2)"),
            };
            to_int(args.first(), base)
        }
        "dict" => {
            let mut m: IndexMap<Key, Obj> = IndexMap::new();
            arity(name, &args, 0, 1)?;
            if let Some(src) = args.first() {
                match src {
                    Obj::Map(other) => m.extend(other.borrow().iter().map(|(k, v)| (k.clone(), v.clone()))),
                    other => {
                        for (i, item) in ops::collect(other)?.into_iter().enumerate() {
                            let pair = match &item {
                                Obj::Str(_) | Obj::List(_) | Obj::Tuple(_) => ops::collect(&item)?,
                                _ => {
                                    return type_error(format!(
                                        "cannot convert dictionary update sequence element #{i} to a sequence"
                                    ))
                                }
                            };
                            if pair.len() != 2 {
                                return raise(
                                    "ValueError",
                                    format!(
                                        "dictionary update sequence element #{i} has length {}; 2 is required",
                                        pair.len()
                                    ),
                                );
                            }
                            m.insert(key_of(&pair[0])?, pair[1].clone());
                        }
                    }
                }
            }
            for (k, v) in kwargs {
                m.insert(Key(Obj::str(&k)), v);
            }
            Ok(new_map(m))
        }
        "enumerate" => {
            let start = take_kw(&mut kwargs, "start");
            no_kwargs(name, &kwargs)?;
            arity(name, &args, 1, 2)?;
            let start = match args.get(1).or(start.as_ref()) {
                Some(s) => index_arg(s)?,
                None => BigInt::zero(),
            };
            let items = ops::collect(&args[0])?
                .into_iter()
                .enumerate()
                .map(|(i, x)| Obj::tuple(vec![Obj::Int(&start + i), x]))
                .collect();
            Ok(named_iter("enumerate", items))
        }
        "sum" => {
            let start = take_kw(&mut kwargs, "start");
            no_kwargs(name, &kwargs)?;
            arity(name, &args, 1, 2)?;
            let mut acc = args.get(1).cloned().or(start).unwrap_or(Obj::int(0));
            if let Obj::Str(_) = acc {
                return type_error("sum() can't sum strings [use ''.join(seq) instead]");
            }
            for x in ops::collect(&args[0])? {
                acc = ops::binop(BinOp::Add, &acc, &x)?;
            }
            Ok(acc)
        }
        "round" => {
            let nd = take_kw(&mut kwargs, "ndigits");
            no_kwargs(name, &kwargs)?;
            arity(name, &args, 1, 2)?;
            let nd = args.get(1).cloned().or(nd).filter(|n| !matches!(n, Obj::None));
            round(&args[0], nd.as_ref())
        }
        _ => {
            no_kwargs(name, &kwargs)?;
            simple(it, name, args)
        }
    }
}

fn simple(it: &mut Interp, name: &'static str, args: Vec<Obj>) -> R<Obj> {
    match name {
        "len" => {
            arity(name, &args, 1, 1)?;
            Ok(Obj::int(ops::len_of(&args[0])? as i64))
        }
        "range" => {
            arity(name, &args, 1, 3)?;
            let ints = args
                .iter()
                .map(|a| {
                    index_arg(a)?
                        .to_i64()
                        .map_or_else(|| raise("OverflowError", "Python int too large to convert to C ssize_t"), Ok)
                })
                .collect::<R<Vec<i64>>>()?;
            let (start, stop, step) = match ints.as_slice() {
                [stop] => (0, *stop, 1),
                [start, stop] => (*start, *stop, 1),
                [start, stop, step] => (*start, *stop, *step),
                _ => unreachable!(),
            };
            if step == 0 {
                return raise("ValueError", "range() arg 3 must not be zero");
            }
            Ok(Obj::Range(Rc::new(RangeObj { start, stop, step })))
        }
        "abs" => {
            arity(name, &args, 1, 1)?;
            match &args[0] {
                Obj::Float(f) => Ok(Obj::Float(f.abs())),
                o => match o.as_bigint() {
                    Some(i) => Ok(Obj::Int(i.abs())),
                    None => type_error(format!("bad operand type for abs(): '{}'", o.type_name())),
                },
            }
        }
        "chr" => {
            arity(name, &args, 1, 1)?;
            let i = index_arg(&args[0])?;
            match i.to_u32().and_then(char::from_u32) {
                Some(c) => Ok(Obj::str(c.encode_utf8(&mut [0; 4]))),
                None => raise("ValueError", "chr() arg not in range(0x110000)"),
            }
        }
        "ord" => {
            arity(name, &args, 1, 1)?;
            match &args[0] {
                Obj::Str(s) => {
                    let mut cs = s.chars();
                    match (cs.next(), cs.next()) {
                        (Some(c), None) => Ok(Obj::int(c as i64)),
                        _ => type_error(format!(
                            "ord() expected a character, but string of length {} found",
                            s.chars().count()
                        )),
                    }
                }
                o => type_error(format!("ord() expected string of length 1, but {} found", o.type_name())),
            }
        }
        "str" => {
            arity(name, &args, 0, 1)?;
            Ok(Obj::str(&args.first().map(Obj::to_display).unwrap_or_default()))
        }
        "repr" => {
            arity(name, &args, 1, 1)?;
            Ok(Obj::str(&args[0].repr()))
        }
        "float" => {
            arity(name, &args, 0, 1)?;
            match args.first() {
                None => Ok(Obj::Float(0.0)),
                Some(Obj::Str(s)) => parse_float(s).map(Obj::Float),
                Some(o) => match o.as_f64() {
                    Some(f) if o.is_number() => {
                        if let (Obj::Int(_), true) = (o, f.is_infinite()) {
                            return raise("OverflowError", "int too large to convert to float");
                        }
                        Ok(Obj::Float(f))
                    }
                    _ => type_error(format!(
                        "float() argument must be a string or a real number, not '{}'",
                        o.type_name()
                    )),
                },
            }
        }
        "bool" => {
            arity(name, &args, 0, 1)?;
            Ok(Obj::Bool(args.first().is_some_and(Obj::truthy)))
        }
        "list" => {
            arity(name, &args, 0, 1)?;
            Ok(Obj::list(match args.first() {
                Some(a) => ops::collect(a)?,
                None => Vec::new(),
            }))
        }
        "tuple" => {
            arity(name, &args, 0, 1)?;
            Ok(match args.first() {
                Some(t @ Obj::Tuple(_)) => t.clone(),
                Some(a) => Obj::tuple(ops::collect(a)?),
                None => Obj::tuple(Vec::new()),
            })
        }
        "set" => {
            arity(name, &args, 0, 1)?;
            let mut keys = IndexSet::new();
            if let Some(a) = args.first() {
                for x in ops::collect(a)? {
                    keys.insert(key_of(&x)?);
                }
            }
            Ok(new_set(keys))
        }
        "reversed" => {
            arity(name, &args, 1, 1)?;
            let (label, mut items) = match &args[0] {
                Obj::List(l) => ("list_reverseiterator", l.borrow().clone()),
                Obj::Range(_) => ("range_iterator", ops::collect(&args[0])?),
                Obj::Tuple(_) | Obj::Str(_) => ("reversed", ops::collect(&args[0])?),
                Obj::Map(m) => ("dict_reversekeyiterator", m.borrow().keys().map(|k| k.0.clone()).collect()),
                o => return type_error(format!("'{}' object is not reversible", o.type_name())),
            };
            items.reverse();
            Ok(named_iter(label, items))
        }
        "zip" => {
            let cols = args.iter().map(ops::collect).collect::<R<Vec<_>>>()?;
            let n = cols.iter().map(Vec::len).min().unwrap_or(0);
            let items = (0..n).map(|i| Obj::tuple(cols.iter().map(|c| c[i].clone()).collect())).collect();
            Ok(named_iter("zip", items))
        }
        "any" | "all" => {
            arity(name, &args, 1, 1)?;
            let want = name == "any";
            let it = ops::iter_of(&args[0])?;
            let mut it = it.borrow_mut();
            while let Some(x) = ops::next_plain(&mut it)? {
                if x.truthy() == want {
                    return Ok(Obj::Bool(want));
                }
            }
            Ok(Obj::Bool(!want))
        }
        "pow" => {
            arity(name, &args, 2, 3)?;
            match args.get(2) {
                None | Some(Obj::None) => ops::binop(BinOp::Pow, &args[0], &args[1]),
                Some(m) => {
                    let (b, e, m) = match (args[0].as_bigint(), args[1].as_bigint(), m.as_bigint()) {
                        (Some(b), Some(e), Some(m)) => (b, e, m),
                        _ => return type_error("pow() 3rd argument not allowed unless all arguments are integers"),
                    };
                    if m.is_zero() {
                        return raise("ValueError", "pow() 3rd argument cannot be 0");
                    }
                    if e.is_negative() {
                        return raise("ValueError", "base is not invertible for the given modulus");
                    }
                    let r = b.modpow(&e, &m);
                    // modpow follows the sign of the base; Python follows the modulus.
                    Ok(Obj::Int(r.mod_floor(&m)))
                }
            }
        }
        "divmod" => {
            arity(name, &args, 2, 2)?;
            let q = ops::binop(BinOp::FloorDiv, &args[0], &args[1])?;
            let r = ops::binop(BinOp::Mod, &args[0], &args[1])?;
            Ok(Obj::tuple(vec![q, r]))
        }
        "isinstance" => {
            arity(name, &args, 2, 2)?;
            let classes = match &args[1] {
                Obj::Tuple(t) => t.to_vec(),
                o => vec![o.clone()],
            };
            for c in &classes {
                match c {
                    Obj::Builtin(t) if is_type_name(t) => {
                        if isinstance(&args[0], t) {
                            return Ok(Obj::Bool(true));
                        }
                    }
                    _ => return type_error("isinstance() arg 2 must be a type, a tuple of types, or a union"),
                }
            }
            Ok(Obj::Bool(false))
        }
        "type" => {
            arity(name, &args, 1, 1)?;
            Ok(Obj::Builtin(match &args[0] {
                Obj::Exc(e) => EXCEPTION_NAMES.iter().find(|n| **n == e.kind).copied().unwrap_or("Exception"),
                o => o.type_name(),
            }))
        }
        "object" => Ok(Obj::Builtin("object")),
        "format" => {
            arity(name, &args, 1, 2)?;
            let spec = match args.get(1) {
                Some(Obj::Str(s)) => s.to_string(),
                Some(o) => return type_error(format!("format() argument 2 must be str, not {}", o.type_name())),
                None => String::new(),
            };
            Ok(Obj::str(&format_obj(&args[0], &spec)?))
        }
        "hex" | "bin" | "oct" => {
            arity(name, &args, 1, 1)?;
            let i = index_arg(&args[0])?;
            let (prefix, radix) = match name {
                "hex" => ("0x", 16),
                "bin" => ("0b", 2),
                _ => ("0o", 8),
            };
            let sign = if i.is_negative() { "-" } else { "" };
            Ok(Obj::str(&format!("{sign}{prefix}{}", i.abs().to_str_radix(radix))))
        }
        "iter" => {
            arity(name, &args, 1, 1)?;
            Ok(Obj::Iter(ops::iter_of(&args[0])?))
        }
        "next" => {
            arity(name, &args, 1, 2)?;
            let Obj::Iter(st) = &args[0] else {
                return type_error(format!("'{}' object is not an iterator", args[0].type_name()));
            };
            let r = ops::next_plain(&mut st.borrow_mut())?;
            match (r, args.get(1)) {
                (Some(v), _) => Ok(v),
                (None, Some(d)) => Ok(d.clone()),
                (None, None) => Err(Unwind::Exc(Obj::Exc(Rc::new(ExcObj {
                    kind: "StopIteration".into(),
                    args: Vec::new(),
                })))),
            }
        }
        "hash" => {
            arity(name, &args, 1, 1)?;
            use std::hash::{Hash, Hasher};
            let k = key_of(&args[0])?;
            let mut h = std::collections::hash_map::DefaultHasher::new();
            k.hash(&mut h);
            Ok(Obj::int(h.finish() as i64))
        }
        _ => {
            let _ = it;
            type_error(format!("'{name}' is not callable"))
        }
    }
}

fn isinstance(v: &Obj, t: &str) -> bool {
    match (v, t) {
        (_, "object") => true,
        (Obj::Bool(_), "int") => true,
        (Obj::Exc(e), base) => exception_is_a(&e.kind, base),
        (Obj::Builtin(n), "type") => is_type_name(n),
        _ => v.type_name() == t,
    }
}

fn apply_key(it: &mut Interp, key: &Option<Obj>, x: &Obj) -> R<Obj> {
    match key {
        Some(k) => it.call_value(k.clone(), vec![x.clone()], Vec::new()),
        None => Ok(x.clone()),
    }
}

/// Stable merge sort with a comparison that may raise.
pub(crate) fn sort_objs(it: &mut Interp, items: Vec<Obj>, key: Option<Obj>, reverse: bool) -> R<Vec<Obj>> {
    let key = key.filter(|k| !matches!(k, Obj::None));
    let mut keyed = Vec::with_capacity(items.len());
    for x in items {
        let k = apply_key(it, &key, &x)?;
        keyed.push((k, x));
    }
    let less = |a: &Obj, b: &Obj| -> R<bool> {
        if reverse {
            ops::compare(CmpOp::Lt, b, a)
        } else {
            ops::compare(CmpOp::Lt, a, b)
        }
    };
    let sorted = merge_sort(keyed, &less)?;
    Ok(sorted.into_iter().map(|(_, x)| x).collect())
}

fn merge_sort(mut v: Vec<(Obj, Obj)>, less: &dyn Fn(&Obj, &Obj) -> R<bool>) -> R<Vec<(Obj, Obj)>> {
    if v.len() <= 1 {
        return Ok(v);
    }
    let right = v.split_off(v.len() / 2);
    let left = merge_sort(v, less)?;
    let right = merge_sort(right, less)?;
    let mut out = Vec::with_capacity(left.len() + right.len());
    let mut l = left.into_iter().peekable();
    let mut r = right.into_iter().peekable();
    loop {
        match (l.peek(), r.peek()) {
            (Some(a), Some(b)) => {
                if less(&b.0, &a.0)? {
                    out.push(r.next().unwrap());
                } else {
                    out.push(l.next().unwrap());
                }
            }
            (Some(_), None) => out.push(l.next().unwrap()),
            (None, Some(_)) => out.push(r.next().unwrap()),
            (None, None) => break,
        }
    }
    Ok(out)
}

fn parse_float(s: &str) -> R<f64> {
    let t = s.trim();
    let lower = t.to_ascii_lowercase();
    let unsigned = lower.trim_start_matches(['+', '-']);
    let neg = lower.starts_with('-');
    let special = match unsigned {
        "inf" | "infinity" => Some(f64::INFINITY),
        "nan" => Some(f64::NAN),
        _ => None,
    };
    if let Some(v) = special {
        return Ok(if neg { -v } else { v });
    }
    let ok_chars = !t.is_empty()
        && t.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-' | '_'))
        && !t.contains("__")
        && !t.starts_with('_')
        && !t.ends_with('_');
    match t.replace('_', "").parse::<f64>() {
        Ok(v) if ok_chars => Ok(v),
        _ => raise("ValueError", format!("could not convert string to float: {}", Obj::str(s).repr())),
    }
}

fn to_int(arg: Option<&Obj>, base: Option<Obj>) -> R<Obj> {
    let Some(arg) = arg else { return Ok(Obj::int(0)) };
    if let Some(b) = base {
        let Obj::Str(s) = arg else {
            return type_error("int() can't convert non-string with explicit base");
        };
        let b = index_arg(&b)?.to_u32().unwrap_or(99);
        if b != 0 && !(2..=36).contains(&b) {
            return raise("ValueError", "int() base must be >= 2 and <= 36, or 0");
        }
        return parse_int(s, b).map(Obj::Int);
    }
    match arg {
        Obj::Int(_) => Ok(arg.clone()),
        Obj::Bool(b) => Ok(Obj::int(*b as i64)),
        Obj::Float(f) => {
            if f.is_nan() {
                return raise("ValueError", "cannot convert float NaN to integer");
            }
            if f.is_infinite() {
                return raise("OverflowError", "cannot convert float infinity to integer");
            }
            Ok(Obj::Int(float_to_bigint(f.trunc())))
        }
        Obj::Str(s) => parse_int(s, 10).map(Obj::Int),
        o => type_error(format!(
            "int() argument must be a string, a bytes-like object or a real number, not '{}'",
            o.type_name()
        )),
    }
}

fn float_to_bigint(f: f64) -> BigInt {
    use num_traits::FromPrimitive;
    BigInt::from_f64(f).unwrap_or_default()
}

fn parse_int(s: &str, base: u32) -> R<BigInt> {
    let err = || {
        raise(
            "ValueError",
            format!("invalid literal for int() with base {base}: {}", Obj::str(s).repr()),
        )
    };
    let t = s.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let lower = body.to_ascii_lowercase();
    let (radix, digits) = match (base, lower.get(..2)) {
        (0 | 16, Some("0x")) => (16, &body[2..]),
        (0 | 8, Some("0o")) => (8, &body[2..]),
        (0 | 2, Some("0b")) => (2, &body[2..]),
        (0, _) => (10, body),
        (b, _) => (b, body),
    };
    let digits = digits.strip_prefix('_').filter(|_| radix != base || base == 0).unwrap_or(digits);
    if digits.is_empty() || digits.starts_with('_') || digits.ends_with('_') || digits.contains("__") {
        return err();
    }
    if base == 0 && radix == 10 && digits.len() > 1 && digits.starts_with('0') && digits.trim_matches(['0', '_']).len() > 0 {
        return err();
    }
    let clean = digits.replace('_', "");
    match BigInt::parse_bytes(clean.as_bytes(), radix) {
        Some(v) if !clean.starts_with(['+', '-']) => Ok(if neg { -v } else { v }),
        _ => err(),
    }
}

fn round(x: &Obj, nd: Option<&Obj>) -> R<Obj> {
    match x {
        Obj::Float(f) => match nd {
            None => {
                if f.is_nan() {
                    return raise("ValueError", "cannot convert float NaN to integer");
                }
                if f.is_infinite() {
                    return raise("OverflowError", "cannot convert float infinity to integer");
                }
                Ok(Obj::Int(float_to_bigint(round_half_even(*f))))
            }
            Some(n) => {
                let n = index_arg(n)?.to_i32().unwrap_or(0);
                Ok(Obj::Float(round_float_digits(*f, n)))
            }
        },
        o => match o.as_bigint() {
            Some(i) => match nd {
                None => Ok(Obj::Int(i)),
                Some(n) => {
                    let n = index_arg(n)?.to_i64().unwrap_or(0);
                    if n >= 0 {
                        return Ok(Obj::Int(i));
                    }
                    let p = num_traits::pow(BigInt::from(10), (-n) as usize);
                    let (q, r) = i.div_mod_floor(&p);
                    let twice: BigInt = &r * 2;
                    let q = match twice.cmp(&p) {
                        Ordering::Greater => q + 1,
                        Ordering::Equal if q.is_odd() => q + 1,
                        _ => q,
                    };
                    Ok(Obj::Int(q * p))
                }
            },
            None => type_error(format!("type {} doesn't define __round__ method", o.type_name())),
        },
    }
}

fn round_half_even(f: f64) -> f64 {
    let r = f.round();
    if (f - f.trunc()).abs() == 0.5 {
        2.0 * (f / 2.0).round()
    } else {
        r
    }
}

/// Correctly rounded decimal rounding, via the shortest decimal string.
fn round_float_digits(f: f64, n: i32) -> f64 {
    if !f.is_finite() || f == 0.0 {
        return f;
    }
    if n > 300 {
        return f;
    }
    if n >= 0 {
        // Format with enough digits to decide the tie exactly.
        let exact = format!("{:.*}", (n as usize) + 30, f);
        let (int_part, frac) = exact.split_once('.').unwrap_or((&exact, ""));
        let keep = &frac[..n as usize];
        let rest = &frac[n as usize..];
        let neg = int_part.starts_with('-');
        let digits: String = format!("{}{}", int_part.trim_start_matches('-'), keep);
        let mut v = BigInt::parse_bytes(digits.as_bytes(), 10).unwrap_or_default();
        let first = rest.as_bytes().first().copied().unwrap_or(b'0');
        let tail_nonzero = rest.bytes().skip(1).any(|b| b != b'0');
        let up = first > b'5' || (first == b'5' && (tail_nonzero || v.is_odd()));
        if up {
            v += 1;
        }
        let s = format!("{}{}e-{}", if neg { "-" } else { "" }, v, n);
        s.parse().unwrap_or(f)
    } else {
        let p = 10f64.powi(-n);
        round_half_even(f / p) * p
    }
}
