//! Code S5: simultaneous-assignment permutation programs.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{item_rng, BenchError, BenchmarkItem, Family};
use crate::minipy::SourceProgram;
use crate::tracer::{EventKind, TraceEvent};
use crate::value::Value;

/// A permutation of `1..=n` as a function table: after applying it, slot
/// `i` holds what slot `image[i]` held before.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self, BenchError> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &i in &image {
            if i == 0 || i > n || seen[i - 1] {
                return Err(BenchError::NotAPermutation(image));
            }
            seen[i - 1] = true;
        }
        Ok(Permutation { image })
    }

    pub fn identity(n: usize) -> Self {
        Permutation { image: (1..=n).collect() }
    }

    /// Uniform sample from S_n.
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let mut image: Vec<usize> = (1..=n).collect();
        image.shuffle(rng);
        Permutation { image }
    }

    /// Reads the right-hand side of `a, b, c = c, a, b` given the variable
    /// order.
    pub fn from_names(vars: &[&str], rhs: &[&str]) -> Result<Self, BenchError> {
        let image = rhs
            .iter()
            .map(|r| {
                vars.iter()
                    .position(|v| v == r)
                    .map(|p| p + 1)
                    .ok_or_else(|| BenchError::UnknownVariable(r.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if image.len() != vars.len() {
            return Err(BenchError::DimensionMismatch { expected: vars.len(), found: image.len() });
        }
        Permutation::new(image)
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn apply<T: Clone>(&self, xs: &[T]) -> Result<Vec<T>, BenchError> {
        if xs.len() != self.len() {
            return Err(BenchError::DimensionMismatch { expected: self.len(), found: xs.len() });
        }
        Ok(self.image.iter().map(|&i| xs[i - 1].clone()).collect())
    }

    /// The permutation equal to applying `self` and then `next`.
    pub fn then(&self, next: &Permutation) -> Result<Permutation, BenchError> {
        if next.len() != self.len() {
            return Err(BenchError::DimensionMismatch { expected: self.len(), found: next.len() });
        }
        Ok(Permutation { image: next.image.iter().map(|&i| self.image[i - 1]).collect() })
    }

    /// `a, b, c = c, a, b`
    pub fn assignment_line(&self, vars: &[&str]) -> String {
        let lhs = vars[..self.len()].join(", ");
        let rhs: Vec<&str> = self.image.iter().map(|&i| vars[i - 1]).collect();
        format!("{lhs} = {}", rhs.join(", "))
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.image.iter().map(usize::to_string).collect();
        write!(f, "({})", parts.join(" "))
    }
}

/// Applies `sigmas` in order to `x0` (left fold): the state after all steps.
pub fn compose_permutations<T: Clone>(sigmas: &[Permutation], x0: &[T]) -> Result<Vec<T>, BenchError> {
    sigmas.iter().try_fold(x0.to_vec(), |x, s| s.apply(&x))
}

/// Every intermediate state, starting with `x0`.
pub fn prefix_states<T: Clone>(sigmas: &[Permutation], x0: &[T]) -> Result<Vec<Vec<T>>, BenchError> {
    let mut out = vec![x0.to_vec()];
    for s in sigmas {
        let next = s.apply(out.last().expect("nonempty"))?;
        out.push(next);
    }
    Ok(out)
}

pub const VAR_NAMES: [&str; 8] = ["a", "b", "c", "d", "e", "f", "g", "h"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct S5Spec {
    pub init: Vec<i64>,
    pub ops: Vec<Permutation>,
    /// Index of the variable printed at the end.
    pub query: usize,
}

impl S5Spec {
    pub fn n_vars(&self) -> usize {
        self.init.len()
    }

    pub fn vars(&self) -> &'static [&'static str] {
        &VAR_NAMES[..self.n_vars()]
    }

    pub fn final_state(&self) -> Result<Vec<i64>, BenchError> {
        compose_permutations(&self.ops, &self.init)
    }

    pub fn program_text(&self) -> String {
        let vars = self.vars();
        let mut out = String::from("def execute_repl_trace():\n    \"\"\"Execute the REPL trace operations.\"\"\"\n");
        for (v, x) in vars.iter().zip(&self.init) {
            out.push_str(&format!("    {v} = {x}\n"));
        }
        for op in &self.ops {
            out.push_str(&format!("    {}\n", op.assignment_line(vars)));
        }
        let q = vars[self.query];
        out.push_str(&format!("    print(f\"{q} = {{{q}}}\")\n"));
        out.push_str("\ndef main(): # << START_OF_TRACE\n    execute_repl_trace()\n");
        out
    }

    /// Reconstructs the spec from a generated program.
    pub fn from_program(text: &str) -> Result<S5Spec, BenchError> {
        let mut init = Vec::new();
        let mut ops = Vec::new();
        let mut query = None;
        for line in text.lines().map(str::trim) {
            if let Some(rest) = line.strip_prefix("print(f\"") {
                let name = rest.split(' ').next().unwrap_or("");
                query = VAR_NAMES.iter().position(|v| *v == name);
            } else if let Some((lhs, rhs)) = line.split_once(" = ") {
                if lhs.contains(',') {
                    let vars = &VAR_NAMES[..init.len()];
                    let rhs: Vec<&str> = rhs.split(',').map(str::trim).collect();
                    ops.push(Permutation::from_names(vars, &rhs)?);
                } else if let Ok(x) = rhs.parse::<i64>() {
                    init.push(x);
                }
            }
        }
        let query = query.ok_or_else(|| BenchError::Malformed("no print of a queried variable".into()))?;
        Ok(S5Spec { init, ops, query })
    }

    pub fn to_item(&self, seed: u64) -> Result<BenchmarkItem, BenchError> {
        let state = self.final_state()?;
        let expected = Value::Tuple(state.iter().map(|&x| Value::int(x)).collect());
        Ok(BenchmarkItem {
            family: Family::S5,
            category: format!("s{}", self.n_vars()),
            depth: self.ops.len(),
            seed,
            program: SourceProgram::new(self.program_text()),
            entry_call: "main()".into(),
            expected_rendering: expected.repr(),
            expected_output: expected,
        })
    }
}

/// Generates a Code S_n item with `n_ops` uniformly sampled permutations.
pub fn gen_s5_program(
    n_vars: usize,
    n_ops: usize,
    seed: u64,
    init_range: (i64, i64),
) -> Result<BenchmarkItem, BenchError> {
    if n_vars == 0 || n_vars > VAR_NAMES.len() {
        return Err(BenchError::DimensionMismatch { expected: 5, found: n_vars });
    }
    let mut rng = item_rng(Family::S5, &format!("s{n_vars}"), n_ops, seed);
    let init = (0..n_vars).map(|_| rng.random_range(init_range.0..=init_range.1)).collect();
    let ops = (0..n_ops).map(|_| Permutation::random(n_vars, &mut rng)).collect();
    let query = rng.random_range(0..n_vars);
    S5Spec { init, ops, query }.to_item(seed)
}

/// States `x_0..=x_N` read back from trace events: the snapshot of every
/// line event in `execute_repl_trace` once all variables are bound.
pub fn trace_states(events: &[TraceEvent], n_vars: usize) -> Vec<Vec<i64>> {
    events
        .iter()
        .filter(|e| e.kind == EventKind::Line && e.function == "execute_repl_trace")
        .filter_map(|e| {
            VAR_NAMES[..n_vars]
                .iter()
                .map(|v| e.snapshot.iter().find(|(k, _)| k == v).and_then(|(_, r)| r.parse().ok()))
                .collect::<Option<Vec<i64>>>()
        })
        .collect()
}

/// Formats a state as `a=4,b=5,c=2,d=1,e=3`.
pub fn render_assignment(state: &[i64]) -> String {
    state
        .iter()
        .zip(VAR_NAMES)
        .map(|(x, v)| format!("{v}={x}"))
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const VARS: [&str; 5] = ["a", "b", "c", "d", "e"];

    fn perm(rhs: &str) -> Permutation {
        let r: Vec<&str> = rhs.split(',').map(str::trim).collect();
        Permutation::from_names(&VARS, &r).unwrap()
    }

    #[test]
    fn worked_example() {
        let ops = [perm("c, e, b, a, d"), perm("e, b, c, d, a")];
        let out = compose_permutations(&ops, &[1, 2, 3, 4, 5]).unwrap();
        assert_eq!(out, vec![4, 5, 2, 1, 3]);
        assert_eq!(render_assignment(&out), "a=4,b=5,c=2,d=1,e=3");
        let mid = ops[0].apply(&[1, 2, 3, 4, 5]).unwrap();
        assert_eq!(mid, vec![3, 5, 2, 1, 4]);
    }

    #[test]
    fn empty_composition_is_identity() {
        assert_eq!(compose_permutations::<i64>(&[], &[8, 4, 7, 8, 7]).unwrap(), vec![8, 4, 7, 8, 7]);
        let id = Permutation::identity(5);
        assert_eq!(compose_permutations(&vec![id; 9], &[1, 2, 3, 4, 5]).unwrap(), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![1, 1, 2]).is_err());
        assert!(Permutation::new(vec![0, 1]).is_err());
        assert!(compose_permutations(&[Permutation::identity(3)], &[1, 2]).is_err());
    }

    #[test]
    fn program_layout() {
        let spec = S5Spec { init: vec![1, 2, 3, 4, 5], ops: vec![perm("c, e, b, a, d")], query: 2 };
        let text = spec.program_text();
        assert!(text.contains("    a, b, c, d, e = c, e, b, a, d\n"));
        assert!(text.contains("    print(f\"c = {c}\")\n"));
        assert!(text.ends_with("def main(): # << START_OF_TRACE\n    execute_repl_trace()\n"));
        assert_eq!(S5Spec::from_program(&text).unwrap(), spec);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = gen_s5_program(5, 16, 3, (1, 9)).unwrap();
        let b = gen_s5_program(5, 16, 3, (1, 9)).unwrap();
        assert_eq!(a, b);
        let c = gen_s5_program(5, 16, 4, (1, 9)).unwrap();
        assert_ne!(a.program, c.program);
    }

    proptest! {
        #[test]
        fn closure_under_composition(seed in any::<u64>()) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let p = Permutation::random(5, &mut rng);
            let q = Permutation::random(5, &mut rng);
            let pq = p.then(&q).unwrap();
            prop_assert!(Permutation::new(pq.image().to_vec()).is_ok());
            let x = [10, 20, 30, 40, 50];
            prop_assert_eq!(pq.apply(&x).unwrap(), q.apply(&p.apply(&x).unwrap()).unwrap());
        }
    }
}
