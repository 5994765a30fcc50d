//! Composition Zoo function catalogs, one per category.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Boolean,
    Bitwise,
    Math,
    Character,
    List,
    Set,
    Dictionary,
    String,
}

impl Category {
    pub const ALL: [Category; 8] = [
        Category::Boolean,
        Category::Bitwise,
        Category::Math,
        Category::Character,
        Category::List,
        Category::Set,
        Category::Dictionary,
        Category::String,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Boolean => "boolean",
            Category::Bitwise => "bitwise",
            Category::Math => "math",
            Category::Character => "character",
            Category::List => "list",
            Category::Set => "set",
            Category::Dictionary => "dictionary",
            Category::String => "string",
        }
    }

    /// Python type name of every value in this category's domain.
    pub fn value_type(self) -> &'static str {
        match self {
            Category::Boolean => "bool",
            Category::Bitwise | Category::Math => "int",
            Category::Character | Category::String => "str",
            Category::List => "list",
            Category::Set => "set",
            Category::Dictionary => "dict",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| BenchError::UnknownCategory(s.to_string()))
    }
}

/// Extra argument taken by some string functions after the string itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxArg {
    /// A short string literal from the separator pool.
    Text,
    /// A small count, 1 to 3.
    Count,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZooFunction {
    /// Descriptive name as written in `source`.
    pub name: &'static str,
    /// Name used in generated programs (`func_N` for the string pool).
    pub program_name: &'static str,
    pub aux: Option<AuxArg>,
    pub source: &'static str,
}

impl ZooFunction {
    /// Definition text with the `def` line renamed to `program_name`.
    pub fn program_source(&self) -> String {
        self.source
            .replacen(&format!("def {}(", self.name), &format!("def {}(", self.program_name), 1)
    }
}

const fn f(name: &'static str, source: &'static str) -> ZooFunction {
    ZooFunction { name, program_name: name, aux: None, source }
}

const fn s(name: &'static str, program_name: &'static str, aux: Option<AuxArg>, source: &'static str) -> ZooFunction {
    ZooFunction { name, program_name, aux, source }
}

const BOOLEAN: &[ZooFunction] = &[
    f("bool_and_true", "def bool_and_true(x):\n    return x and True\n"),
    f("bool_or_false", "def bool_or_false(x):\n    return x or False\n"),
    f("bool_not", "def bool_not(x):\n    return not x\n"),
    f("bool_identity", "def bool_identity(x):\n    return x\n"),
    f("bool_xor_true", "def bool_xor_true(x):\n    return x != True\n"),
];

const BITWISE: &[ZooFunction] = &[
    f("bit_and_15", "def bit_and_15(x):\n    return x & 15\n"),
    f("bit_or_8", "def bit_or_8(x):\n    return x | 8\n"),
    f("bit_xor_7", "def bit_xor_7(x):\n    return x ^ 7\n"),
    f("bit_shift_left_1", "def bit_shift_left_1(x):\n    return x << 1\n"),
    f("bit_shift_right_1", "def bit_shift_right_1(x):\n    return x >> 1\n"),
];

const MATH: &[ZooFunction] = &[
    f("math_abs", "def math_abs(x):\n    return abs(x)\n"),
    f("math_negate", "def math_negate(x):\n    return -x\n"),
    f("math_double", "def math_double(x):\n    return x * 2\n"),
    f("math_halve", "def math_halve(x):\n    return x // 2\n"),
    f("math_mod_10", "def math_mod_10(x):\n    return x % 10\n"),
];

const CHARACTER: &[ZooFunction] = &[
    f("char_next", "def char_next(c):\n    return chr((ord(c) - ord('a') + 1) % 26 + ord('a'))\n"),
    f("char_prev", "def char_prev(c):\n    return chr((ord(c) - ord('a') - 1) % 26 + ord('a'))\n"),
    f("char_shift_3", "def char_shift_3(c):\n    return chr((ord(c) - ord('a') + 3) % 26 + ord('a'))\n"),
    f("char_shift_5", "def char_shift_5(c):\n    return chr((ord(c) - ord('a') + 5) % 26 + ord('a'))\n"),
    f("char_identity", "def char_identity(c):\n    return c\n"),
];

const LIST: &[ZooFunction] = &[
    f("list_append_0", "def list_append_0(lst):\n    return lst + [0]\n"),
    f("list_prepend_1", "def list_prepend_1(lst):\n    return [1] + lst\n"),
    f("list_reverse", "def list_reverse(lst):\n    return lst[::-1]\n"),
    f("list_drop_first", "def list_drop_first(lst):\n    return lst[1:] if len(lst) > 1 else lst\n"),
    f("list_drop_last", "def list_drop_last(lst):\n    return lst[:-1] if len(lst) > 1 else lst\n"),
];

const SET: &[ZooFunction] = &[
    f("set_add_1", "def set_add_1(s):\n    return s | {1}\n"),
    f("set_add_2", "def set_add_2(s):\n    return s | {2}\n"),
    f("set_remove_1", "def set_remove_1(s):\n    return s - {1}\n"),
    f("set_remove_2", "def set_remove_2(s):\n    return s - {2}\n"),
    f("set_intersect_123", "def set_intersect_123(s):\n    return s & {1, 2, 3}\n"),
];

const DICTIONARY: &[ZooFunction] = &[
    f("dict_set_a_1", "def dict_set_a_1(d):\n    return {**d, 'a': 1}\n"),
    f("dict_set_b_2", "def dict_set_b_2(d):\n    return {**d, 'b': 2}\n"),
    f("dict_remove_a", "def dict_remove_a(d):\n    return {k: v for k, v in d.items() if k != 'a'}\n"),
    f("dict_remove_b", "def dict_remove_b(d):\n    return {k: v for k, v in d.items() if k != 'b'}\n"),
    f("dict_inc_a", "def dict_inc_a(d):\n    return {**d, 'a': d.get('a', 0) + 1}\n"),
];

use AuxArg::{Count, Text};

const STRING: &[ZooFunction] = &[
    s(
        "reverse_words",
        "func_2",
        None,
        "def reverse_words(s):\n    words = s.split()\n    return ' '.join(reversed(words))\n",
    ),
    s("add_suffix", "func_3", Some(Text), "def add_suffix(s, suf):\n    return s + suf\n"),
    s(
        "compress_repeats",
        "func_4",
        None,
        "def compress_repeats(s):
    if not s:
        return s
    result = [s[0]]
    for ch in s[1:]:
        if ch != result[-1]:
            result.append(ch)
    return ''.join(result)
",
    ),
    s(
        "alternate_case",
        "func_12",
        None,
        "def alternate_case(s):\n    return ''.join(ch.lower() if i % 2 else ch.upper() for i, ch in enumerate(s))\n",
    ),
    s("insert_separator", "func_14", Some(Text), "def insert_separator(s, sep):\n    return sep.join(s)\n"),
    s(
        "loop_concat",
        "func_5",
        Some(Count),
        "def loop_concat(s, n):
    result = \"\"
    for _ in range(n):
        result += s
    return result
",
    ),
    s(
        "while_rotate",
        "func_6",
        Some(Count),
        "def while_rotate(s, n):
    count = 0
    while count < n and s:
        s = s[1:] + s[0]
        count += 1
    return s
",
    ),
    s(
        "loop_filter_nonalpha",
        "func_7",
        None,
        "def loop_filter_nonalpha(s):
    result = \"\"
    for ch in s:
        if ch.isalpha():
            result += ch
    return result
",
    ),
    s("add_prefix", "func_1", Some(Text), "def add_prefix(s, pre):\n    return pre + s\n"),
    s(
        "rotate_str",
        "func_8",
        Some(Count),
        "def rotate_str(s, n):
    if not s:
        return s
    n = n % len(s)
    return s[n:] + s[:n]
",
    ),
    s(
        "vowel_to_number",
        "func_9",
        None,
        "def vowel_to_number(s):
    mapping = {
        'a': '1', 'e': '2', 'i': '3', 'o': '4', 'u': '5',
        'A': '1', 'E': '2', 'I': '3', 'O': '4', 'U': '5'
    }
    return ''.join(mapping.get(ch, ch) for ch in s)
",
    ),
    s(
        "remove_vowels",
        "func_10",
        None,
        "def remove_vowels(s):
    vowels = 'aeiouAEIOU'
    return ''.join(ch for ch in s if ch not in vowels)
",
    ),
    s(
        "shift_chars",
        "func_11",
        Some(Count),
        "def shift_chars(s, shift):
    def shift_char(ch):
        if 'a' <= ch <= 'z':
            return chr((ord(ch) - ord('a') + shift) % 26 + ord('a'))
        elif 'A' <= ch <= 'Z':
            return chr((ord(ch) - ord('A') + shift) % 26 + ord('A'))
        return ch

    return ''.join(shift_char(ch) for ch in s)
",
    ),
    s(
        "backchain_add_digit",
        "func_13",
        Some(Count),
        "def backchain_add_digit(s, depth):
    def has_digit(t):
        return any(ch.isdigit() for ch in t)

    transformations = [
        lambda t: t + \"1\",
        lambda t: \"2\" + t,
        lambda t: t.replace(\"a\", \"3\"),
        lambda t: t[::-1],
    ]

    def helper(t, d):
        if has_digit(t):
            return t
        if d == 0:
            return None
        for trans in transformations:
            new_t = trans(t)
            res = helper(new_t, d - 1)
            if res is not None:
                return res
        return None

    result = helper(s, depth)
    return result if result is not None else s
",
    ),
    s("repeat_str", "func_15", Some(Count), "def repeat_str(s, n):\n    return s * n\n"),
];

/// The catalog of one category, in listing order.
pub fn zoo_catalog(category: Category) -> &'static [ZooFunction] {
    match category {
        Category::Boolean => BOOLEAN,
        Category::Bitwise => BITWISE,
        Category::Math => MATH,
        Category::Character => CHARACTER,
        Category::List => LIST,
        Category::Set => SET,
        Category::Dictionary => DICTIONARY,
        Category::String => STRING,
    }
}

/// Looks up a function by descriptive or program name.
pub fn find_function(category: Category, name: &str) -> Option<&'static ZooFunction> {
    zoo_catalog(category)
        .iter()
        .find(|f| f.name == name || f.program_name == name)
}

/// String functions whose measured atomic accuracy reaches `min_accuracy`,
/// in catalog order. Unmeasured functions are dropped.
pub fn select_string_pool(accuracy: &[(String, f64)], min_accuracy: f64) -> Vec<&'static str> {
    STRING
        .iter()
        .filter(|f| {
            accuracy
                .iter()
                .any(|(n, a)| (n == f.name || n == f.program_name) && *a >= min_accuracy)
        })
        .map(|f| f.program_name)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minipy::{parse_source, unparse};

    #[test]
    fn sizes() {
        for c in Category::ALL {
            let n = zoo_catalog(c).len();
            assert_eq!(n, if c == Category::String { 15 } else { 5 }, "{c}");
        }
    }

    #[test]
    fn bitwise_has_xor_7() {
        let f = find_function(Category::Bitwise, "bit_xor_7").unwrap();
        assert!(f.source.contains("return x ^ 7"));
        let c = find_function(Category::Character, "char_next").unwrap();
        assert!(c.source.contains("chr((ord(c) - ord('a') + 1) % 26"));
    }

    #[test]
    fn every_function_roundtrips() {
        for c in Category::ALL {
            for f in zoo_catalog(c) {
                let m = parse_source(f.source).unwrap_or_else(|e| panic!("{}: {e}", f.name));
                let again = parse_source(&unparse(&m)).unwrap();
                assert_eq!(m, again, "{}", f.name);
            }
        }
    }

    #[test]
    fn program_names_unique() {
        let mut ids: Vec<&str> = STRING.iter().map(|f| f.program_name).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 15);
        assert_eq!(find_function(Category::String, "func_14").unwrap().name, "insert_separator");
        assert!(find_function(Category::String, "func_12").unwrap().program_source().starts_with("def func_12(s):"));
    }

    #[test]
    fn pool_selection() {
        let acc = vec![("add_prefix".to_string(), 0.95), ("func_14".to_string(), 0.5)];
        assert_eq!(select_string_pool(&acc, 0.9), vec!["func_1"]);
    }

    #[test]
    fn unknown_category() {
        assert!("strings".parse::<Category>().is_err());
        assert_eq!("set".parse::<Category>().unwrap(), Category::Set);
    }
}
