//! `format()` specs, `str.format` and `%`-formatting.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

use super::obj::*;
use crate::value::float_repr;

#[derive(Default, Debug)]
struct Spec {
    fill: Option<char>,
    align: Option<char>,
    sign: Option<char>,
    alt: bool,
    zero: bool,
    width: usize,
    grouping: Option<char>,
    precision: Option<usize>,
    ty: Option<char>,
}

fn parse_spec(spec: &str) -> R<Spec> {
    let chars: Vec<char> = spec.chars().collect();
    let mut s = Spec::default();
    let mut i = 0;
    let is_align = |c: char| matches!(c, '<' | '>' | '^' | '=');
    if chars.len() >= 2 && is_align(chars[1]) {
        s.fill = Some(chars[0]);
        s.align = Some(chars[1]);
        i = 2;
    } else if !chars.is_empty() && is_align(chars[0]) {
        s.align = Some(chars[0]);
        i = 1;
    }
    if i < chars.len() && matches!(chars[i], '+' | '-' | ' ') {
        s.sign = Some(chars[i]);
        i += 1;
    }
    if i < chars.len() && chars[i] == '#' {
        s.alt = true;
        i += 1;
    }
    if i < chars.len() && chars[i] == '0' {
        s.zero = true;
        i += 1;
    }
    let start = i;
    while i < chars.len() && chars[i].is_ascii_digit() {
        i += 1;
    }
    if i > start {
        s.width = chars[start..i].iter().collect::<String>().parse().unwrap_or(0);
    }
    if i < chars.len() && matches!(chars[i], ',' | '_') {
        s.grouping = Some(chars[i]);
        i += 1;
    }
    if i < chars.len() && chars[i] == '.' {
        i += 1;
        let start = i;
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
        if i == start {
            return raise("ValueError", "Format specifier missing precision");
        }
        s.precision = chars[start..i].iter().collect::<String>().parse().ok();
    }
    if i < chars.len() {
        s.ty = Some(chars[i]);
        i += 1;
    }
    if i != chars.len() {
        return raise("ValueError", "Invalid format specifier");
    }
    Ok(s)
}

fn pad(body: String, sign: &str, spec: &Spec, default_align: char) -> String {
    let (fill, align) = if spec.zero && spec.align.is_none() {
        ('0', '=')
    } else {
        (spec.fill.unwrap_or(' '), spec.align.unwrap_or(default_align))
    };
    let len = body.chars().count() + sign.chars().count();
    if len >= spec.width {
        return format!("{sign}{body}");
    }
    let n = spec.width - len;
    let fills = |k: usize| fill.to_string().repeat(k);
    match align {
        '<' => format!("{sign}{body}{}", fills(n)),
        '^' => format!("{}{sign}{body}{}", fills(n / 2), fills(n - n / 2)),
        '=' => format!("{sign}{}{body}", fills(n)),
        _ => format!("{}{sign}{body}", fills(n)),
    }
}

fn group(digits: &str, sep: char, every: usize) -> String {
    let chars: Vec<char> = digits.chars().collect();
    let mut out = String::new();
    for (i, c) in chars.iter().enumerate() {
        if i > 0 && (chars.len() - i) % every == 0 {
            out.push(sep);
        }
        out.push(*c);
    }
    out
}

fn sign_str(neg: bool, spec: &Spec) -> &'static str {
    match (neg, spec.sign) {
        (true, _) => "-",
        (false, Some('+')) => "+",
        (false, Some(' ')) => " ",
        _ => "",
    }
}

/// Python `format(value, spec)`.
pub(crate) fn format_obj(v: &Obj, spec: &str) -> R<String> {
    if spec.is_empty() {
        return Ok(v.to_display());
    }
    let s = parse_spec(spec)?;
    match v {
        Obj::Str(text) => {
            if !matches!(s.ty, None | Some('s')) {
                return raise(
                    "ValueError",
                    format!("Unknown format code '{}' for object of type 'str'", s.ty.unwrap()),
                );
            }
            let body: String = match s.precision {
                Some(p) => text.chars().take(p).collect(),
                None => text.to_string(),
            };
            Ok(pad(body, "", &s, '<'))
        }
        Obj::Int(_) | Obj::Bool(_) => {
            let i = v.as_bigint().unwrap();
            match s.ty {
                Some('e' | 'E' | 'f' | 'F' | 'g' | 'G' | '%') => {
                    format_float(i.to_f64().unwrap_or(f64::INFINITY), &s)
                }
                None if matches!(v, Obj::Bool(_)) && s.grouping.is_none() => {
                    Ok(pad(v.to_display(), "", &s, '<'))
                }
                _ => format_int(&i, &s),
            }
        }
        Obj::Float(f) => format_float(*f, &s),
        _ => type_error(format!(
            "unsupported format string passed to {}.__format__",
            v.type_name()
        )),
    }
}

fn format_int(i: &BigInt, s: &Spec) -> R<String> {
    if s.precision.is_some() {
        return raise("ValueError", "Precision not allowed in integer format specifier");
    }
    let a = i.abs();
    let (mut digits, prefix) = match s.ty {
        None | Some('d') | Some('n') => (a.to_string(), ""),
        Some('b') => (a.to_str_radix(2), "0b"),
        Some('o') => (a.to_str_radix(8), "0o"),
        Some('x') => (a.to_str_radix(16), "0x"),
        Some('X') => (a.to_str_radix(16).to_uppercase(), "0X"),
        Some('c') => {
            let c = i.to_u32().and_then(char::from_u32);
            return match c {
                Some(c) => Ok(pad(c.to_string(), "", s, '<')),
                None => raise("OverflowError", "%c arg not in range(0x110000)"),
            };
        }
        Some(t) => {
            return raise("ValueError", format!("Unknown format code '{t}' for object of type 'int'"))
        }
    };
    if let Some(g) = s.grouping {
        let every = if matches!(s.ty, Some('b' | 'o' | 'x' | 'X')) { 4 } else { 3 };
        digits = group(&digits, g, every);
    }
    let sign = sign_str(i.is_negative(), s);
    let pre = if s.alt { prefix } else { "" };
    Ok(pad(digits, &format!("{sign}{pre}"), s, '>'))
}

fn sci(x: f64, prec: usize, upper: bool) -> String {
    let raw = format!("{:.*e}", prec, x);
    let (mant, exp) = raw.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    let e = if upper { 'E' } else { 'e' };
    format!("{mant}{e}{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}

fn strip_zeros(s: &str) -> String {
    if let Some((m, e)) = s.split_once(['e', 'E']) {
        let m = if m.contains('.') { m.trim_end_matches('0').trim_end_matches('.') } else { m };
        let sep = if s.contains('E') { 'E' } else { 'e' };
        return format!("{m}{sep}{e}");
    }
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn general(x: f64, prec: usize, upper: bool, alt: bool) -> String {
    let p = prec.max(1);
    if x == 0.0 {
        return if alt { format!("{:.*}", p - 1, 0.0) } else { "0".into() };
    }
    let probe = format!("{:.*e}", p - 1, x);
    let exp: i32 = probe.split_once('e').unwrap().1.parse().unwrap();
    let out = if exp >= -4 && exp < p as i32 {
        format!("{:.*}", (p as i32 - 1 - exp).max(0) as usize, x)
    } else {
        sci(x, p - 1, upper)
    };
    if alt {
        out
    } else {
        strip_zeros(&out)
    }
}

fn format_float(f: f64, s: &Spec) -> R<String> {
    let neg = f.is_sign_negative() && !f.is_nan();
    let x = f.abs();
    let mut body = if x.is_nan() || x.is_infinite() {
        let t = if x.is_nan() { "nan" } else { "inf" };
        let t = if matches!(s.ty, Some('E' | 'F' | 'G')) { t.to_uppercase() } else { t.to_string() };
        if s.ty == Some('%') {
            format!("{t}%")
        } else {
            t
        }
    } else {
        match s.ty {
            Some('f' | 'F') => format!("{:.*}", s.precision.unwrap_or(6), x),
            Some('e' | 'E') => sci(x, s.precision.unwrap_or(6), s.ty == Some('E')),
            Some('g' | 'G') => general(x, s.precision.unwrap_or(6), s.ty == Some('G'), s.alt),
            Some('%') => format!("{:.*}%", s.precision.unwrap_or(6), x * 100.0),
            None => match s.precision {
                None => float_repr(x),
                Some(p) => {
                    let g = general(x, p, false, s.alt);
                    if g.contains(['.', 'e', 'n', 'i']) {
                        g
                    } else {
                        format!("{g}.0")
                    }
                }
            },
            Some(t) => {
                return raise(
                    "ValueError",
                    format!("Unknown format code '{t}' for object of type 'float'"),
                )
            }
        }
    };
    if let Some(g) = s.grouping {
        let split = body.find(|c: char| !c.is_ascii_digit()).unwrap_or(body.len());
        let (int_part, rest) = body.split_at(split);
        body = format!("{}{}", group(int_part, g, 3), rest);
    }
    Ok(pad(body, sign_str(neg, s), s, '>'))
}

/// `str.format` with automatic or explicit positional fields and keyword
/// fields.
pub(crate) fn str_format(fmt: &str, args: &[Obj], kwargs: &[(String, Obj)]) -> R<String> {
    let chars: Vec<char> = fmt.chars().collect();
    let mut out = String::new();
    let mut auto = 0usize;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '{' && chars.get(i + 1) == Some(&'{') {
            out.push('{');
            i += 2;
            continue;
        }
        if c == '}' && chars.get(i + 1) == Some(&'}') {
            out.push('}');
            i += 2;
            continue;
        }
        if c == '}' {
            return raise("ValueError", "Single '}' encountered in format string");
        }
        if c != '{' {
            out.push(c);
            i += 1;
            continue;
        }
        let end = match chars[i..].iter().position(|&c| c == '}') {
            Some(p) => i + p,
            None => return raise("ValueError", "Single '{' encountered in format string"),
        };
        let field: String = chars[i + 1..end].iter().collect();
        i = end + 1;
        let (head, spec) = match field.split_once(':') {
            Some((h, s)) => (h.to_string(), s.to_string()),
            None => (field.clone(), String::new()),
        };
        let (name, conv) = match head.split_once('!') {
            Some((n, c)) => (n.to_string(), Some(c.to_string())),
            None => (head, None),
        };
        let value = if name.is_empty() {
            auto += 1;
            args.get(auto - 1)
        } else if let Ok(n) = name.parse::<usize>() {
            args.get(n)
        } else {
            kwargs.iter().find(|(k, _)| *k == name).map(|(_, v)| v)
        };
        let Some(value) = value else {
            if let Some(idx) = if name.is_empty() { Some(auto - 1) } else { name.parse::<usize>().ok() } {
                return raise(
                    "IndexError",
                    format!("Replacement index {idx} out of range for positional args tuple"),
                );
            }
            return Err(Unwind::Exc(Obj::Exc(std::rc::Rc::new(ExcObj {
                kind: "KeyError".into(),
                args: vec![Obj::str(&name)],
            }))));
        };
        let value = match conv.as_deref() {
            Some("r") => Obj::str(&value.repr()),
            Some("s") => Obj::str(&value.to_display()),
            None => value.clone(),
            Some(_) => return raise("ValueError", "Unknown conversion specifier"),
        };
        out.push_str(&format_obj(&value, &spec)?);
    }
    Ok(out)
}

/// `fmt % arg` for strings.
pub(crate) fn percent_format(fmt: &str, arg: &Obj) -> R<Obj> {
    let args: Vec<Obj> = match arg {
        Obj::Tuple(t) => t.to_vec(),
        other => vec![other.clone()],
    };
    let chars: Vec<char> = fmt.chars().collect();
    let mut out = String::new();
    let mut next = 0usize;
    let mut i = 0;
    while i < chars.len() {
        if chars[i] != '%' {
            out.push(chars[i]);
            i += 1;
            continue;
        }
        i += 1;
        let start = i;
        while i < chars.len() && matches!(chars[i], '-' | '+' | ' ' | '#' | '0'..='9' | '.') {
            i += 1;
        }
        let Some(&ty) = chars.get(i) else {
            return raise("ValueError", "incomplete format");
        };
        i += 1;
        if ty == '%' {
            out.push('%');
            continue;
        }
        let flags: String = chars[start..i - 1].iter().collect();
        let Some(v) = args.get(next) else {
            return type_error("not enough arguments for format string");
        };
        next += 1;
        let (left, rest) = match flags.strip_prefix('-') {
            Some(r) => (true, r.to_string()),
            None => (false, flags.clone()),
        };
        let mut spec = String::new();
        if left {
            spec.push('<');
        }
        spec.push_str(&rest);
        let piece = match ty {
            's' => format_obj(&Obj::str(&v.to_display()), &spec)?,
            'r' => format_obj(&Obj::str(&v.repr()), &spec)?,
            'd' | 'i' => match v {
                Obj::Float(f) => format_obj(&Obj::Int(num_traits::FromPrimitive::from_f64(f.trunc()).unwrap_or_default()), &spec)?,
                _ if v.as_bigint().is_some() => format_obj(v, &spec)?,
                _ => return type_error(format!("%{ty} format: a real number is required, not {}", v.type_name())),
            },
            'f' | 'F' | 'e' | 'E' | 'g' | 'G' => match v.as_f64() {
                Some(f) => {
                    let spec = if spec.contains('.') || ty == 'g' || ty == 'G' { format!("{spec}{ty}") } else { format!("{spec}.6{ty}") };
                    format_obj(&Obj::Float(f), &spec)?
                }
                None => return type_error(format!("must be real number, not {}", v.type_name())),
            },
            'x' | 'X' | 'o' | 'c' => format_obj(v, &format!("{spec}{ty}"))?,
            _ => return raise("ValueError", format!("unsupported format character '{ty}'")),
        };
        out.push_str(&piece);
    }
    if next < args.len() {
        return type_error("not all arguments converted during string formatting");
    }
    Ok(Obj::str(&out))
}
