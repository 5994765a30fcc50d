//! Random depth-d nesting of catalog functions.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::{item_rng, zoo_catalog, AuxArg, BenchError, BenchmarkItem, Category, Family, ZooFunction};
use crate::minipy::SourceProgram;
use crate::tracer::{evaluate, Outcome};
use crate::value::{json_string, Value};

/// Step ceiling for the ground-truth evaluator. Far above anything a depth-5
/// composition needs.
pub const ZOO_EVAL_CEILING: usize = 1_000_000;

const TEXT_POOL: [&str; 3] = ["-", ".", "-."];
const MAX_ATTEMPTS: usize = 64;

/// One application in a composition chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainLink {
    pub func: &'static ZooFunction,
    pub aux: Option<Value>,
}

impl ChainLink {
    pub fn new(func: &'static ZooFunction, aux: Option<Value>) -> Self {
        ChainLink { func, aux }
    }

    fn wrap(&self, inner: String) -> String {
        match &self.aux {
            Some(a) => format!("{}({inner}, {})", self.func.program_name, a.repr()),
            None => format!("{}({inner})", self.func.program_name),
        }
    }
}

fn family_of(category: Category) -> Family {
    match category {
        Category::String => Family::StringComp,
        _ => Family::Zoo,
    }
}

/// A random input from the category's domain.
pub fn sample_zoo_input(category: Category, rng: &mut impl Rng) -> Value {
    let letter = |rng: &mut dyn rand::RngCore| char::from(b'a' + rng.random_range(0..26u8));
    match category {
        Category::Boolean => Value::Bool(rng.random_bool(0.5)),
        Category::Bitwise => Value::int(rng.random_range(0..=255)),
        Category::Math => Value::int(rng.random_range(-100..=100)),
        Category::Character => Value::str(letter(rng).to_string()),
        Category::List => {
            let n = rng.random_range(3..=8);
            Value::List((0..n).map(|_| Value::int(rng.random_range(-9..=9))).collect())
        }
        Category::Set => Value::Set((1..=5).filter(|_| rng.random_bool(0.5)).map(Value::int).collect()),
        Category::Dictionary => {
            let mut entries = Vec::new();
            for k in ["a", "b"] {
                if rng.random_bool(0.5) {
                    entries.push((Value::str(k), Value::int(rng.random_range(0..=9))));
                }
            }
            Value::Map(entries)
        }
        Category::String => {
            let n = rng.random_range(4..=10);
            Value::str((0..n).map(|_| letter(rng)).collect::<String>())
        }
    }
}

fn sample_aux(aux: AuxArg, rng: &mut impl Rng) -> Value {
    match aux {
        AuxArg::Text => Value::str(*TEXT_POOL.choose(rng).expect("nonempty")),
        AuxArg::Count => Value::int(rng.random_range(1..=3)),
    }
}

fn input_literal(v: &Value) -> String {
    match v {
        // the prompts quote string inputs with double quotes
        Value::Str(s) if s.chars().all(|c| c.is_ascii_alphanumeric()) => json_string(s),
        other => other.repr(),
    }
}

fn func_number(f: &ZooFunction) -> usize {
    f.program_name
        .strip_prefix("func_")
        .and_then(|n| n.parse().ok())
        .unwrap_or(0)
}

/// Program text for a chain (innermost first) applied to `input`.
fn program_text(category: Category, chain: &[ChainLink], input: &Value) -> String {
    let catalog = zoo_catalog(category);
    let mut used: Vec<&ZooFunction> = catalog
        .iter()
        .filter(|f| chain.iter().any(|l| l.func.program_name == f.program_name))
        .collect();
    if category == Category::String {
        used.sort_by_key(|f| func_number(f));
    }
    let defs: Vec<String> = used.iter().map(|f| f.program_source()).collect();
    let nest = chain.iter().fold("x".to_string(), |acc, l| l.wrap(acc));
    format!(
        "{}\n\ndef main_solution(x):\n    return {nest}\n\ndef main(): # << START_OF_TRACE\n    return main_solution({})\n",
        defs.join("\n"),
        input_literal(input)
    )
}

/// Builds an item from an explicit chain, innermost function first.
pub fn zoo_item_from_chain(
    category: Category,
    chain: &[ChainLink],
    input: Value,
    seed: u64,
) -> Result<BenchmarkItem, BenchError> {
    if chain.is_empty() {
        return Err(BenchError::ZeroDepth);
    }
    let program = SourceProgram::new(program_text(category, chain, &input));
    let expected = match evaluate(&program, "main()", ZOO_EVAL_CEILING) {
        Ok(Outcome::Returned(v)) => v,
        Ok(other) => return Err(BenchError::Oracle(other.to_string())),
        Err(e) => return Err(BenchError::Oracle(e.to_string())),
    };
    if expected.type_name() != category.value_type() {
        return Err(BenchError::Oracle(format!(
            "expected {} result, got {}",
            category.value_type(),
            expected.type_name()
        )));
    }
    Ok(BenchmarkItem {
        family: family_of(category),
        category: category.to_string(),
        depth: chain.len(),
        seed,
        program,
        entry_call: "main()".into(),
        expected_rendering: expected.repr(),
        expected_output: expected,
    })
}

/// Random depth-`depth` composition over the whole category catalog.
pub fn gen_zoo_item(category: Category, depth: usize, seed: u64) -> Result<BenchmarkItem, BenchError> {
    let pool: Vec<&'static ZooFunction> = zoo_catalog(category).iter().collect();
    gen_from_pool(category, depth, seed, &pool)
}

/// Like [`gen_zoo_item`] but drawing only from the named functions.
pub fn gen_zoo_item_with_pool(
    category: Category,
    depth: usize,
    seed: u64,
    names: &[&str],
) -> Result<BenchmarkItem, BenchError> {
    let pool = names
        .iter()
        .map(|n| super::find_function(category, n).ok_or_else(|| BenchError::UnknownFunction(n.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    gen_from_pool(category, depth, seed, &pool)
}

fn gen_from_pool(
    category: Category,
    depth: usize,
    seed: u64,
    pool: &[&'static ZooFunction],
) -> Result<BenchmarkItem, BenchError> {
    if depth == 0 {
        return Err(BenchError::ZeroDepth);
    }
    if pool.is_empty() {
        return Err(BenchError::Exhausted { attempts: 0 });
    }
    let mut rng = item_rng(family_of(category), category.as_str(), depth, seed);
    for _ in 0..MAX_ATTEMPTS {
        let input = sample_zoo_input(category, &mut rng);
        let chain: Vec<ChainLink> = (0..depth)
            .map(|_| {
                let f = *pool.choose(&mut rng).expect("nonempty");
                let aux = f.aux.map(|a| sample_aux(a, &mut rng));
                ChainLink::new(f, aux)
            })
            .collect();
        match zoo_item_from_chain(category, &chain, input, seed) {
            Ok(item) => return Ok(item),
            Err(BenchError::Oracle(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(BenchError::Exhausted { attempts: MAX_ATTEMPTS })
}

/// Ten depth-5 items for every non-string category, seeds 0..10.
pub fn table1_fixture() -> Result<Vec<BenchmarkItem>, BenchError> {
    let mut out = Vec::new();
    for c in Category::ALL.into_iter().filter(|c| *c != Category::String) {
        for seed in 0..10 {
            out.push(gen_zoo_item(c, 5, seed)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchgen::find_function;
    use crate::tracer::{execute_traced, DEFAULT_STEP_CEILING};

    fn link(c: Category, name: &str, aux: Option<Value>) -> ChainLink {
        ChainLink::new(find_function(c, name).unwrap(), aux)
    }

    #[test]
    fn math_abs_depth_one() {
        let it = zoo_item_from_chain(Category::Math, &[link(Category::Math, "math_abs", None)], Value::int(-5), 0)
            .unwrap();
        assert_eq!(it.expected_output, Value::int(5));
        assert!(it.program.source_text.contains("    return math_abs(x)\n"));
        assert!(it.program.source_text.ends_with("    return main_solution(-5)\n"));
    }

    #[test]
    fn bitwise_chain() {
        let chain = [link(Category::Bitwise, "bit_and_15", None), link(Category::Bitwise, "bit_or_8", None)];
        let it = zoo_item_from_chain(Category::Bitwise, &chain, Value::int(7), 0).unwrap();
        assert!(it.program.source_text.contains("return bit_or_8(bit_and_15(x))"));
        assert_eq!(it.expected_output, Value::int((7 & 15) | 8));
    }

    fn alternate_case(s: &str) -> String {
        s.chars()
            .enumerate()
            .map(|(i, c)| if i % 2 == 1 { c.to_ascii_lowercase() } else { c.to_ascii_uppercase() })
            .collect()
    }

    #[test]
    fn string_prompt_example() {
        let s = Category::String;
        let chain = [
            link(s, "func_14", Some(Value::str("-"))),
            link(s, "func_12", None),
            link(s, "func_12", None),
        ];
        let it = zoo_item_from_chain(s, &chain, Value::str("qgjucy"), 0).unwrap();
        let text = &it.program.source_text;
        assert!(text.contains("def main_solution(x):\n    return func_12(func_12(func_14(x, '-')))\n"));
        assert!(text.ends_with("def main(): # << START_OF_TRACE\n    return main_solution(\"qgjucy\")\n"));
        assert!(text.find("def func_12").unwrap() < text.find("def func_14").unwrap());
        let joined: String = "qgjucy".chars().map(String::from).collect::<Vec<_>>().join("-");
        let oracle = alternate_case(&alternate_case(&joined));
        assert_eq!(it.expected_output, Value::str(oracle));
        assert_eq!(it.family, Family::StringComp);
    }

    #[test]
    fn regeneration_is_identical() {
        for c in Category::ALL {
            let a = gen_zoo_item(c, 4, 11).unwrap();
            let b = gen_zoo_item(c, 4, 11).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.depth, 4);
        }
    }

    #[test]
    fn traced_result_matches_oracle() {
        for c in Category::ALL {
            for seed in 0..5 {
                let it = gen_zoo_item(c, 3, seed).unwrap();
                let doc = execute_traced(&it.program, &it.entry_call, DEFAULT_STEP_CEILING).unwrap();
                assert_eq!(doc.final_return.as_ref(), Some(&it.expected_output), "{}", it.id());
            }
        }
    }

    #[test]
    fn pools_restrict_functions() {
        let it = gen_zoo_item_with_pool(Category::String, 3, 2, &["func_1", "func_15"]).unwrap();
        let text = &it.program.source_text;
        assert!(!text.contains("def func_12"));
        assert!(gen_zoo_item_with_pool(Category::String, 1, 0, &["nope"]).is_err());
        assert_eq!(gen_zoo_item(Category::Set, 0, 0), Err(BenchError::ZeroDepth));
    }

    #[test]
    fn fixture_shape() {
        let items = table1_fixture().unwrap();
        assert_eq!(items.len(), 70);
        assert!(items.iter().all(|i| i.depth == 5 && i.family == Family::Zoo));
    }
}
