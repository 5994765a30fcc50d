//! Methods of the builtin types.

use std::rc::Rc;

use indexmap::IndexSet;
use num_traits::Signed;

use super::builtins::sort_objs;
use super::format::str_format;
use super::interp::Interp;
use super::obj::*;
use super::ops;

const STR_METHODS: &[&str] = &[
    "upper", "lower", "casefold", "strip", "lstrip", "rstrip", "split", "rsplit", "splitlines", "join",
    "replace", "startswith", "endswith", "find", "rfind", "index", "rindex", "count", "isdigit",
    "isnumeric", "isdecimal", "isalpha", "isalnum", "isspace", "isupper", "islower", "istitle", "title",
    "capitalize", "swapcase", "center", "ljust", "rjust", "zfill", "format", "partition", "rpartition",
    "removeprefix", "removesuffix",
];
const LIST_METHODS: &[&str] = &[
    "append", "extend", "pop", "insert", "remove", "index", "count", "sort", "reverse", "clear", "copy",
];
const TUPLE_METHODS: &[&str] = &["index", "count"];
const DICT_METHODS: &[&str] = &[
    "get", "keys", "values", "items", "pop", "popitem", "setdefault", "update", "clear", "copy", "fromkeys",
];
const SET_METHODS: &[&str] = &[
    "add", "remove", "discard", "pop", "clear", "copy", "union", "intersection", "difference",
    "symmetric_difference", "update", "intersection_update", "difference_update", "issubset",
    "issuperset", "isdisjoint",
];
const INT_METHODS: &[&str] = &["bit_length", "bit_count"];
const FLOAT_METHODS: &[&str] = &["is_integer"];

pub(crate) fn exists(type_name: &str, name: &str) -> bool {
    let table: &[&str] = match type_name {
        "str" => STR_METHODS,
        "list" => LIST_METHODS,
        "tuple" => TUPLE_METHODS,
        "dict" => DICT_METHODS,
        "set" => SET_METHODS,
        "int" | "bool" => INT_METHODS,
        "float" => FLOAT_METHODS,
        _ => return false,
    };
    table.contains(&name)
}

type Kwargs = Vec<(String, Obj)>;

fn nargs(method: &str, args: &[Obj], min: usize, max: usize) -> R<()> {
    let n = args.len();
    if n >= min && n <= max {
        return Ok(());
    }
    if min == max {
        if min == 0 {
            return type_error(format!("{method}() takes no arguments ({n} given)"));
        }
        return type_error(format!(
            "{method}() takes exactly {min} argument{} ({n} given)",
            if min == 1 { "" } else { "s" }
        ));
    }
    if n < min {
        type_error(format!("{method} expected at least {min} argument{}, got {n}", if min == 1 { "" } else { "s" }))
    } else {
        type_error(format!("{method} expected at most {max} argument{}, got {n}", if max == 1 { "" } else { "s" }))
    }
}

fn take_kw(kwargs: &mut Kwargs, name: &str) -> Option<Obj> {
    let pos = kwargs.iter().position(|(k, _)| k == name)?;
    Some(kwargs.remove(pos).1)
}

fn no_kwargs(method: &str, kwargs: &Kwargs) -> R<()> {
    match kwargs.first() {
        Some(_) => type_error(format!("{method}() takes no keyword arguments")),
        None => Ok(()),
    }
}

fn key_error(k: Obj) -> Unwind {
    Unwind::Exc(Obj::Exc(Rc::new(ExcObj { kind: "KeyError".into(), args: vec![k] })))
}

pub(crate) fn call(it: &mut Interp, recv: Obj, name: &str, args: Vec<Obj>, kwargs: Kwargs) -> R<Obj> {
    match &recv {
        Obj::Str(s) => str_method(s, name, args, kwargs),
        Obj::List(l) => list_method(it, l, name, args, kwargs),
        Obj::Tuple(t) => {
            no_kwargs(name, &kwargs)?;
            nargs(name, &args, 1, 1)?;
            seq_index_count(t, name, &args[0], "tuple")
        }
        Obj::Map(m) => dict_method(m, name, args, kwargs),
        Obj::Set(s) => {
            no_kwargs(name, &kwargs)?;
            set_method(s, name, args)
        }
        Obj::Int(_) | Obj::Bool(_) => {
            nargs(name, &args, 0, 0)?;
            let i = recv.as_bigint().unwrap_or_default();
            Ok(match name {
                "bit_length" => Obj::int(i.abs().bits() as i64),
                _ => Obj::int(i.abs().to_str_radix(2).matches('1').count() as i64),
            })
        }
        Obj::Float(f) => {
            nargs(name, &args, 0, 0)?;
            Ok(Obj::Bool(f.is_finite() && f.fract() == 0.0))
        }
        _ => raise("AttributeError", format!("'{}' object has no attribute '{name}'", recv.type_name())),
    }
}

fn seq_index_count(items: &[Obj], name: &str, x: &Obj, what: &str) -> R<Obj> {
    if name == "count" {
        return Ok(Obj::int(items.iter().filter(|y| y.py_eq(x)).count() as i64));
    }
    match items.iter().position(|y| y.py_eq(x)) {
        Some(i) => Ok(Obj::int(i as i64)),
        None if what == "list" => raise("ValueError", format!("{} is not in list", x.repr())),
        None => raise("ValueError", "tuple.index(x): x not in tuple"),
    }
}

// ----- str --------------------------------------------------------------------

fn want_str<'a>(o: &'a Obj, what: &str) -> R<&'a str> {
    match o {
        Obj::Str(s) => Ok(s),
        o => type_error(format!("{what} must be str, not {}", o.type_name())),
    }
}

fn opt_str<'a>(o: Option<&'a Obj>, what: &str) -> R<Option<&'a str>> {
    match o {
        None | Some(Obj::None) => Ok(None),
        Some(o) => want_str(o, what).map(Some),
    }
}

fn opt_int(o: Option<&Obj>) -> R<Option<i64>> {
    match o {
        None | Some(Obj::None) => Ok(None),
        Some(o) => match o.as_i64() {
            Some(i) => Ok(Some(i)),
            None => type_error(format!(
                "slice indices must be integers or None or have an __index__ method, not {}",
                o.type_name()
            )),
        },
    }
}

/// Python's clamping of `start`/`end` arguments into `0..=len`.
fn clamp_range(len: usize, start: Option<i64>, end: Option<i64>) -> (usize, usize) {
    let n = len as i64;
    let fix = |v: i64| if v < 0 { (v + n).max(0) } else { v.min(n) };
    let s = start.map(fix).unwrap_or(0);
    let e = end.map(fix).unwrap_or(n);
    (s as usize, e as usize)
}

fn find_chars(hay: &[char], needle: &[char], lo: usize, hi: usize, from_right: bool) -> Option<usize> {
    if lo > hi || hi - lo < needle.len() {
        return None;
    }
    let positions = lo..=hi - needle.len();
    let hit = |i: &usize| hay[*i..*i + needle.len()] == *needle;
    if from_right {
        positions.rev().find(hit)
    } else {
        positions.into_iter().find(hit)
    }
}

fn split_whitespace_left(s: &str, maxsplit: i64) -> Vec<Obj> {
    let mut out = Vec::new();
    let mut rest = s.trim_start();
    while !rest.is_empty() {
        if maxsplit >= 0 && out.len() as i64 >= maxsplit {
            out.push(Obj::str(rest));
            break;
        }
        match rest.find(char::is_whitespace) {
            Some(i) => {
                out.push(Obj::str(&rest[..i]));
                rest = rest[i..].trim_start();
            }
            None => {
                out.push(Obj::str(rest));
                break;
            }
        }
    }
    out
}

fn split_whitespace_right(s: &str, maxsplit: i64) -> Vec<Obj> {
    let mut out = Vec::new();
    let mut rest = s.trim_end();
    while !rest.is_empty() {
        if maxsplit >= 0 && out.len() as i64 >= maxsplit {
            out.push(Obj::str(rest));
            break;
        }
        match rest.rfind(char::is_whitespace) {
            Some(i) => {
                let w = rest[i..].chars().next().map_or(1, char::len_utf8);
                out.push(Obj::str(&rest[i + w..]));
                rest = rest[..i].trim_end();
            }
            None => {
                out.push(Obj::str(rest));
                break;
            }
        }
    }
    out.reverse();
    out
}

fn is_cased(c: char) -> bool {
    c.is_lowercase() || c.is_uppercase()
}

fn title(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut prev_cased = false;
    for c in s.chars() {
        if prev_cased {
            out.extend(c.to_lowercase());
        } else {
            out.extend(c.to_uppercase());
        }
        prev_cased = is_cased(c);
    }
    out
}

fn fill_char(o: Option<&Obj>) -> R<char> {
    match o {
        None => Ok(' '),
        Some(Obj::Str(s)) if s.chars().count() == 1 => Ok(s.chars().next().unwrap_or(' ')),
        Some(Obj::Str(_)) => type_error("The fill character must be exactly one character long"),
        Some(o) => type_error(format!(
            "The fill character must be a unicode character, not {}",
            o.type_name()
        )),
    }
}

fn str_method(s: &Rc<str>, name: &str, mut args: Vec<Obj>, mut kwargs: Kwargs) -> R<Obj> {
    let s: &str = s;
    if name == "format" {
        return Ok(Obj::str(&str_format(s, &args, &kwargs)?));
    }
    if matches!(name, "split" | "rsplit") {
        if let Some(v) = take_kw(&mut kwargs, "sep") {
            args.insert(0, v);
        }
        if let Some(v) = take_kw(&mut kwargs, "maxsplit") {
            if args.is_empty() {
                args.push(Obj::None);
            }
            args.insert(1, v);
        }
    }
    no_kwargs(name, &kwargs)?;
    let chars = || s.chars().collect::<Vec<char>>();
    let pred = |f: fn(char) -> bool| Obj::Bool(!s.is_empty() && s.chars().all(f));
    match name {
        "upper" => nargs(name, &args, 0, 0).map(|_| Obj::str(&s.to_uppercase())),
        "lower" | "casefold" => nargs(name, &args, 0, 0).map(|_| Obj::str(&s.to_lowercase())),
        "swapcase" => {
            nargs(name, &args, 0, 0)?;
            let out: String = s
                .chars()
                .flat_map(|c| {
                    if c.is_uppercase() {
                        c.to_lowercase().collect::<Vec<_>>()
                    } else {
                        c.to_uppercase().collect()
                    }
                })
                .collect();
            Ok(Obj::str(&out))
        }
        "title" => nargs(name, &args, 0, 0).map(|_| Obj::str(&title(s))),
        "capitalize" => {
            nargs(name, &args, 0, 0)?;
            let mut cs = s.chars();
            let out = match cs.next() {
                Some(c) => c.to_uppercase().chain(cs.as_str().to_lowercase().chars()).collect(),
                None => String::new(),
            };
            Ok(Obj::str(&out))
        }
        "strip" | "lstrip" | "rstrip" => {
            nargs(name, &args, 0, 1)?;
            let set: Option<Vec<char>> = opt_str(args.first(), &format!("{name} arg"))?.map(|c| c.chars().collect());
            let matches = |c: char| match &set {
                Some(cs) => cs.contains(&c),
                None => c.is_whitespace(),
            };
            let out = match name {
                "strip" => s.trim_matches(matches),
                "lstrip" => s.trim_start_matches(matches),
                _ => s.trim_end_matches(matches),
            };
            Ok(Obj::str(out))
        }
        "split" | "rsplit" => {
            nargs(name, &args, 0, 2)?;
            let sep = opt_str(args.first(), "must be str or None")?;
            let maxsplit = opt_int(args.get(1))?.unwrap_or(-1);
            let parts = match sep {
                None if name == "split" => split_whitespace_left(s, maxsplit),
                None => split_whitespace_right(s, maxsplit),
                Some("") => return raise("ValueError", "empty separator"),
                Some(sep) => {
                    let parts: Vec<&str> = match (name, maxsplit) {
                        (_, m) if m < 0 => s.split(sep).collect(),
                        ("split", m) => s.splitn(m as usize + 1, sep).collect(),
                        (_, m) => {
                            let mut v: Vec<&str> = s.rsplitn(m as usize + 1, sep).collect();
                            v.reverse();
                            v
                        }
                    };
                    parts.into_iter().map(Obj::str).collect()
                }
            };
            Ok(Obj::list(parts))
        }
        "splitlines" => {
            nargs(name, &args, 0, 1)?;
            let keep = args.first().is_some_and(Obj::truthy);
            let mut out = Vec::new();
            let mut cur = String::new();
            let mut it = s.chars().peekable();
            while let Some(c) = it.next() {
                if matches!(c, '\n' | '\r' | '\x0b' | '\x0c' | '\x1c' | '\x1d' | '\x1e' | '\u{85}' | '\u{2028}' | '\u{2029}') {
                    let mut end = c.to_string();
                    if c == '\r' && it.peek() == Some(&'\n') {
                        it.next();
                        end.push('\n');
                    }
                    if keep {
                        cur.push_str(&end);
                    }
                    out.push(Obj::str(&std::mem::take(&mut cur)));
                } else {
                    cur.push(c);
                }
            }
            if !cur.is_empty() {
                out.push(Obj::str(&cur));
            }
            Ok(Obj::list(out))
        }
        "join" => {
            nargs(name, &args, 1, 1)?;
            let items = ops::collect(&args[0])?;
            let mut parts = Vec::with_capacity(items.len());
            for (i, x) in items.iter().enumerate() {
                match x {
                    Obj::Str(p) => parts.push(p.to_string()),
                    o => {
                        return type_error(format!(
                            "sequence item {i}: expected str instance, {} found",
                            o.type_name()
                        ))
                    }
                }
            }
            Ok(Obj::str(&parts.join(s)))
        }
        "replace" => {
            nargs(name, &args, 2, 3)?;
            let old = want_str(&args[0], "replace() argument 1")?;
            let new = want_str(&args[1], "replace() argument 2")?;
            let count = opt_int(args.get(2))?.unwrap_or(-1);
            Ok(Obj::str(&if count < 0 { s.replace(old, new) } else { s.replacen(old, new, count as usize) }))
        }
        "startswith" | "endswith" => {
            nargs(name, &args, 1, 3)?;
            let cs = chars();
            let (lo, hi) = clamp_range(cs.len(), opt_int(args.get(1))?, opt_int(args.get(2))?);
            let window: String = if lo <= hi { cs[lo..hi].iter().collect() } else { String::new() };
            let cands = match &args[0] {
                Obj::Tuple(t) => t.to_vec(),
                o => vec![o.clone()],
            };
            for c in &cands {
                let Obj::Str(p) = c else {
                    return type_error(format!(
                        "{name} first arg must be str or a tuple of str, not {}",
                        c.type_name()
                    ));
                };
                if lo > cs.len() || lo > hi && !p.is_empty() {
                    continue;
                }
                let hit = if name == "startswith" { window.starts_with(&**p) } else { window.ends_with(&**p) };
                if hit {
                    return Ok(Obj::Bool(true));
                }
            }
            Ok(Obj::Bool(false))
        }
        "find" | "rfind" | "index" | "rindex" | "count" => {
            nargs(name, &args, 1, 3)?;
            let sub: Vec<char> = want_str(&args[0], "must be")
                .map_err(|_| {
                    Unwind::Exc(Obj::exc(
                        "TypeError",
                        format!("must be str, not {}", args[0].type_name()),
                    ))
                })?
                .chars()
                .collect();
            let cs = chars();
            let start = opt_int(args.get(1))?;
            let (lo, hi) = clamp_range(cs.len(), start, opt_int(args.get(2))?);
            if start.is_some_and(|st| st > cs.len() as i64) {
                return match name {
                    "count" => Ok(Obj::int(0)),
                    "find" | "rfind" => Ok(Obj::int(-1)),
                    _ => raise("ValueError", "substring not found"),
                };
            }
            if name == "count" {
                if lo > hi {
                    return Ok(Obj::int(0));
                }
                if sub.is_empty() {
                    return Ok(Obj::int((hi - lo + 1) as i64));
                }
                let mut n = 0;
                let mut i = lo;
                while i + sub.len() <= hi {
                    if cs[i..i + sub.len()] == *sub {
                        n += 1;
                        i += sub.len();
                    } else {
                        i += 1;
                    }
                }
                return Ok(Obj::int(n));
            }
            let from_right = name.starts_with('r');
            match find_chars(&cs, &sub, lo, hi, from_right) {
                Some(i) => Ok(Obj::int(i as i64)),
                None if name.ends_with("find") => Ok(Obj::int(-1)),
                None => raise("ValueError", "substring not found"),
            }
        }
        "isdigit" | "isdecimal" => Ok(pred(|c| c.is_ascii_digit())),
        "isnumeric" => Ok(pred(char::is_numeric)),
        "isalpha" => Ok(pred(char::is_alphabetic)),
        "isalnum" => Ok(pred(char::is_alphanumeric)),
        "isspace" => Ok(pred(char::is_whitespace)),
        "isupper" => Ok(Obj::Bool(s.chars().any(is_cased) && !s.chars().any(char::is_lowercase))),
        "islower" => Ok(Obj::Bool(s.chars().any(is_cased) && !s.chars().any(char::is_uppercase))),
        "istitle" => Ok(Obj::Bool(s.chars().any(is_cased) && title(s) == s)),
        "center" | "ljust" | "rjust" => {
            nargs(name, &args, 1, 2)?;
            let width = opt_int(args.first())?.unwrap_or(0);
            let fill = fill_char(args.get(1))?;
            let len = s.chars().count() as i64;
            if width <= len {
                return Ok(Obj::str(s));
            }
            let marg = width - len;
            let left = match name {
                "ljust" => 0,
                "rjust" => marg,
                _ => marg / 2 + (marg & width & 1),
            };
            let pad = |n: i64| std::iter::repeat(fill).take(n as usize).collect::<String>();
            Ok(Obj::str(&format!("{}{s}{}", pad(left), pad(marg - left))))
        }
        "zfill" => {
            nargs(name, &args, 1, 1)?;
            let width = opt_int(args.first())?.unwrap_or(0);
            let len = s.chars().count() as i64;
            if width <= len {
                return Ok(Obj::str(s));
            }
            let zeros = "0".repeat((width - len) as usize);
            let out = match s.chars().next() {
                Some(c @ ('+' | '-')) => format!("{c}{zeros}{}", &s[1..]),
                _ => format!("{zeros}{s}"),
            };
            Ok(Obj::str(&out))
        }
        "partition" | "rpartition" => {
            nargs(name, &args, 1, 1)?;
            let sep = want_str(&args[0], "must be")?;
            if sep.is_empty() {
                return raise("ValueError", "empty separator");
            }
            let found = if name == "partition" { s.find(sep) } else { s.rfind(sep) };
            let parts = match found {
                Some(i) => [&s[..i], sep, &s[i + sep.len()..]],
                None if name == "partition" => [s, "", ""],
                None => ["", "", s],
            };
            Ok(Obj::tuple(parts.iter().map(|p| Obj::str(p)).collect()))
        }
        "removeprefix" => {
            nargs(name, &args, 1, 1)?;
            let p = want_str(&args[0], "removeprefix() argument")?;
            Ok(Obj::str(s.strip_prefix(p).unwrap_or(s)))
        }
        "removesuffix" => {
            nargs(name, &args, 1, 1)?;
            let p = want_str(&args[0], "removesuffix() argument")?;
            Ok(Obj::str(s.strip_suffix(p).unwrap_or(s)))
        }
        _ => raise("AttributeError", format!("'str' object has no attribute '{name}'")),
    }
}

// ----- list -------------------------------------------------------------------

fn list_method(it: &mut Interp, l: &ListRef, name: &str, args: Vec<Obj>, mut kwargs: Kwargs) -> R<Obj> {
    if name == "sort" {
        let key = take_kw(&mut kwargs, "key");
        let reverse = take_kw(&mut kwargs, "reverse").is_some_and(|r| r.truthy());
        no_kwargs(name, &kwargs)?;
        if !args.is_empty() {
            return type_error("sort() takes no positional arguments");
        }
        let items = std::mem::take(&mut *l.borrow_mut());
        match sort_objs(it, items.clone(), key, reverse) {
            Ok(sorted) => {
                *l.borrow_mut() = sorted;
                return Ok(Obj::None);
            }
            Err(e) => {
                *l.borrow_mut() = items;
                return Err(e);
            }
        }
    }
    no_kwargs(name, &kwargs)?;
    match name {
        "append" => {
            nargs(name, &args, 1, 1)?;
            l.borrow_mut().push(args[0].clone());
            Ok(Obj::None)
        }
        "extend" => {
            nargs(name, &args, 1, 1)?;
            let items = ops::collect(&args[0])?;
            l.borrow_mut().extend(items);
            Ok(Obj::None)
        }
        "insert" => {
            nargs(name, &args, 2, 2)?;
            let Some(i) = args[0].as_i64() else {
                return type_error(format!("'{}' object cannot be interpreted as an integer", args[0].type_name()));
            };
            let mut v = l.borrow_mut();
            let n = v.len() as i64;
            let pos = if i < 0 { (i + n).max(0) } else { i.min(n) };
            v.insert(pos as usize, args[1].clone());
            Ok(Obj::None)
        }
        "pop" => {
            nargs(name, &args, 0, 1)?;
            let i = match args.first() {
                Some(o) => match o.as_i64() {
                    Some(i) => i,
                    None => {
                        return type_error(format!("'{}' object cannot be interpreted as an integer", o.type_name()))
                    }
                },
                None => -1,
            };
            let mut v = l.borrow_mut();
            if v.is_empty() {
                return raise("IndexError", "pop from empty list");
            }
            let n = v.len() as i64;
            let j = if i < 0 { i + n } else { i };
            if j < 0 || j >= n {
                return raise("IndexError", "pop index out of range");
            }
            Ok(v.remove(j as usize))
        }
        "remove" => {
            nargs(name, &args, 1, 1)?;
            let pos = l.borrow().iter().position(|y| y.py_eq(&args[0]));
            match pos {
                Some(i) => {
                    l.borrow_mut().remove(i);
                    Ok(Obj::None)
                }
                None => raise("ValueError", "list.remove(x): x not in list"),
            }
        }
        "index" => {
            nargs(name, &args, 1, 3)?;
            let v = l.borrow().clone();
            let (lo, hi) = clamp_range(v.len(), opt_int(args.get(1))?, opt_int(args.get(2))?);
            let found = (lo..hi.max(lo)).find(|&i| v[i].py_eq(&args[0]));
            match found {
                Some(i) => Ok(Obj::int(i as i64)),
                None => raise("ValueError", format!("{} is not in list", args[0].repr())),
            }
        }
        "count" => {
            nargs(name, &args, 1, 1)?;
            let v = l.borrow().clone();
            seq_index_count(&v, name, &args[0], "list")
        }
        "reverse" => {
            nargs(name, &args, 0, 0)?;
            l.borrow_mut().reverse();
            Ok(Obj::None)
        }
        "clear" => {
            nargs(name, &args, 0, 0)?;
            l.borrow_mut().clear();
            Ok(Obj::None)
        }
        "copy" => {
            nargs(name, &args, 0, 0)?;
            Ok(Obj::list(l.borrow().clone()))
        }
        _ => raise("AttributeError", format!("'list' object has no attribute '{name}'")),
    }
}

// ----- dict -------------------------------------------------------------------

pub(crate) fn dict_fromkeys(args: Vec<Obj>) -> R<Obj> {
    nargs("fromkeys", &args, 1, 2)?;
    let v = args.get(1).cloned().unwrap_or(Obj::None);
    let mut m = indexmap::IndexMap::new();
    for k in ops::collect(&args[0])? {
        m.insert(key_of(&k)?, v.clone());
    }
    Ok(new_map(m))
}

fn dict_method(m: &MapRef, name: &str, args: Vec<Obj>, kwargs: Kwargs) -> R<Obj> {
    if name != "update" {
        no_kwargs(name, &kwargs)?;
    }
    match name {
        "get" => {
            nargs(name, &args, 1, 2)?;
            let k = key_of(&args[0])?;
            Ok(m.borrow().get(&k).cloned().unwrap_or_else(|| args.get(1).cloned().unwrap_or(Obj::None)))
        }
        "keys" => nargs(name, &args, 0, 0).map(|_| Obj::View(ViewKind::Keys, m.clone())),
        "values" => nargs(name, &args, 0, 0).map(|_| Obj::View(ViewKind::Values, m.clone())),
        "items" => nargs(name, &args, 0, 0).map(|_| Obj::View(ViewKind::Items, m.clone())),
        "pop" => {
            nargs(name, &args, 1, 2)?;
            let k = key_of(&args[0])?;
            let removed = m.borrow_mut().shift_remove(&k);
            match (removed, args.get(1)) {
                (Some(v), _) => Ok(v),
                (None, Some(d)) => Ok(d.clone()),
                (None, None) => Err(key_error(args[0].clone())),
            }
        }
        "popitem" => {
            nargs(name, &args, 0, 0)?;
            match m.borrow_mut().pop() {
                Some((k, v)) => Ok(Obj::tuple(vec![k.0, v])),
                None => Err(key_error(Obj::str("popitem(): dictionary is empty"))),
            }
        }
        "setdefault" => {
            nargs(name, &args, 1, 2)?;
            let k = key_of(&args[0])?;
            let d = args.get(1).cloned().unwrap_or(Obj::None);
            Ok(m.borrow_mut().entry(k).or_insert(d).clone())
        }
        "update" => {
            nargs(name, &args, 0, 1)?;
            let mut add: Vec<(Key, Obj)> = Vec::new();
            if let Some(src) = args.first() {
                match src {
                    Obj::Map(o) => add.extend(o.borrow().iter().map(|(k, v)| (k.clone(), v.clone()))),
                    other => {
                        for (i, item) in ops::collect(other)?.into_iter().enumerate() {
                            let pair = ops::collect(&item).map_err(|_| {
                                Unwind::Exc(Obj::exc(
                                    "TypeError",
                                    format!("cannot convert dictionary update sequence element #{i} to a sequence"),
                                ))
                            })?;
                            if pair.len() != 2 {
                                return raise(
                                    "ValueError",
                                    format!(
                                        "dictionary update sequence element #{i} has length {}; 2 is required",
                                        pair.len()
                                    ),
                                );
                            }
                            add.push((key_of(&pair[0])?, pair[1].clone()));
                        }
                    }
                }
            }
            for (k, v) in kwargs {
                add.push((Key(Obj::str(&k)), v));
            }
            m.borrow_mut().extend(add);
            Ok(Obj::None)
        }
        "clear" => {
            nargs(name, &args, 0, 0)?;
            m.borrow_mut().clear();
            Ok(Obj::None)
        }
        "copy" => {
            nargs(name, &args, 0, 0)?;
            Ok(new_map(m.borrow().clone()))
        }
        "fromkeys" => dict_fromkeys(args),
        _ => raise("AttributeError", format!("'dict' object has no attribute '{name}'")),
    }
}

// ----- set --------------------------------------------------------------------

fn keys_of(o: &Obj) -> R<IndexSet<Key>> {
    match o {
        Obj::Set(s) => Ok(s.borrow().clone()),
        other => ops::collect(other)?.iter().map(key_of).collect(),
    }
}

fn set_method(s: &SetRef, name: &str, args: Vec<Obj>) -> R<Obj> {
    match name {
        "add" => {
            nargs(name, &args, 1, 1)?;
            let k = key_of(&args[0])?;
            s.borrow_mut().insert(k);
            Ok(Obj::None)
        }
        "remove" | "discard" => {
            nargs(name, &args, 1, 1)?;
            let k = key_of(&args[0])?;
            let had = s.borrow_mut().shift_remove(&k);
            if !had && name == "remove" {
                return Err(key_error(args[0].clone()));
            }
            Ok(Obj::None)
        }
        "pop" => {
            nargs(name, &args, 0, 0)?;
            let first = s.borrow_mut().shift_remove_index(0);
            match first {
                Some(k) => Ok(k.0),
                None => Err(key_error(Obj::str("pop from an empty set"))),
            }
        }
        "clear" => {
            nargs(name, &args, 0, 0)?;
            s.borrow_mut().clear();
            Ok(Obj::None)
        }
        "copy" => {
            nargs(name, &args, 0, 0)?;
            Ok(new_set(s.borrow().clone()))
        }
        "union" | "update" => {
            let mut acc = s.borrow().clone();
            for a in &args {
                acc.extend(keys_of(a)?);
            }
            if name == "update" {
                *s.borrow_mut() = acc;
                return Ok(Obj::None);
            }
            Ok(new_set(acc))
        }
        "intersection" | "intersection_update" | "difference" | "difference_update" => {
            let mut acc = s.borrow().clone();
            for a in &args {
                let other = keys_of(a)?;
                if name.starts_with("intersection") {
                    acc.retain(|k| other.contains(k));
                } else {
                    acc.retain(|k| !other.contains(k));
                }
            }
            if name.ends_with("_update") {
                *s.borrow_mut() = acc;
                return Ok(Obj::None);
            }
            Ok(new_set(acc))
        }
        "symmetric_difference" => {
            nargs(name, &args, 1, 1)?;
            let other = keys_of(&args[0])?;
            let mine = s.borrow().clone();
            let mut acc: IndexSet<Key> = mine.iter().filter(|k| !other.contains(*k)).cloned().collect();
            acc.extend(other.into_iter().filter(|k| !mine.contains(k)));
            Ok(new_set(acc))
        }
        "issubset" | "issuperset" | "isdisjoint" => {
            nargs(name, &args, 1, 1)?;
            let other = keys_of(&args[0])?;
            let mine = s.borrow();
            Ok(Obj::Bool(match name {
                "issubset" => mine.iter().all(|k| other.contains(k)),
                "issuperset" => other.iter().all(|k| mine.contains(k)),
                _ => !mine.iter().any(|k| other.contains(k)),
            }))
        }
        _ => raise("AttributeError", format!("'set' object has no attribute '{name}'")),
    }
}
