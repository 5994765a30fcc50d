use tracebench_core::benchgen::{
    compose_permutations, gen_s5_program, gen_zoo_item, prefix_states, trace_states, Category, S5Spec,
};
use tracebench_core::tracer::{evaluate_full, execute_traced, Outcome, DEFAULT_STEP_CEILING};
use tracebench_core::Value;

fn check_s5(spec: &S5Spec, program_seed: u64) {
    let item = spec.to_item(program_seed).unwrap();
    let oracle = compose_permutations(&spec.ops, &spec.init).unwrap();

    let doc = execute_traced(&item.program, &item.entry_call, DEFAULT_STEP_CEILING).unwrap();
    assert!(doc.completed());
    let states = trace_states(&doc.events, spec.n_vars());
    assert_eq!(states, prefix_states(&spec.ops, &spec.init).unwrap());
    assert_eq!(states.last().unwrap(), &oracle);

    let q = spec.query;
    let expected_print = format!("{} = {}\n", spec.vars()[q], oracle[q]);
    assert_eq!(doc.stdout, expected_print);
    let ev = evaluate_full(&item.program, &item.entry_call, DEFAULT_STEP_CEILING).unwrap();
    assert_eq!(ev.stdout, expected_print);
    assert_eq!(ev.outcome, Outcome::Returned(Value::None));
}

#[test]
fn s5_three_way_agreement() {
    for n in [8, 16, 32, 64, 128] {
        for seed in 0..10 {
            let item = gen_s5_program(5, n, seed, (1, 9)).unwrap();
            check_s5(&item.s5_spec().unwrap(), seed);
        }
    }
}

#[test]
fn s5_eight_swap_prompt() {
    let text = "def execute_repl_trace():
    \"\"\"Execute the REPL trace operations.\"\"\"
    a = 8
    b = 4
    c = 7
    d = 8
    e = 7
    a, b, c, d, e = c, e, b, a, d
    a, b, c, d, e = e, b, c, d, a
    a, b, c, d, e = b, e, a, c, d
    a, b, c, d, e = a, b, e, d, c
    a, b, c, d, e = b, c, e, a, d
    a, b, c, d, e = e, a, c, b, d
    a, b, c, d, e = a, e, c, b, d
    a, b, c, d, e = b, d, e, c, a
    print(f\"c = {c}\")

def main(): # << START_OF_TRACE
    execute_repl_trace()
";
    let spec = S5Spec::from_program(text).unwrap();
    assert_eq!(spec.init, vec![8, 4, 7, 8, 7]);
    assert_eq!(spec.ops.len(), 8);
    assert_eq!(spec.program_text(), text);
    check_s5(&spec, 0);
}

#[test]
fn zoo_types_and_trace_agree() {
    for c in Category::ALL {
        for d in 1..=5 {
            for seed in 0..4 {
                let it = gen_zoo_item(c, d, seed).unwrap();
                assert_eq!(it.expected_output.type_name(), c.value_type());
                let doc = execute_traced(&it.program, &it.entry_call, DEFAULT_STEP_CEILING).unwrap();
                assert_eq!(doc.final_return.as_ref(), Some(&it.expected_output), "{}", it.id());
            }
        }
    }
}
