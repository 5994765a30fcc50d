//! Before/after runs of the decomposition intervention.

use tracebench_core::benchgen::{BenchmarkItem, ZOO_EVAL_CEILING};
use tracebench_core::minipy::{unparse, SourceProgram};
use tracebench_core::tracer::{evaluate, Outcome};
use tracebench_core::transforms::{decompose_expressions, expand_string_ops, TransformConfig};

use crate::endpoint::CompletionModel;
use crate::eval::{run_eval, EvalRecord, EvalSettings, Variant, Verdict};
use crate::HarnessError;

/// The item with its program decomposed and its string operations
/// expanded. Fails if the rewritten program no longer produces the
/// expected output.
pub fn transform_item(item: &BenchmarkItem, cfg: &TransformConfig) -> Result<BenchmarkItem, HarnessError> {
    let module = item.program.parse().map_err(tracebench_core::tracer::TraceError::from)?;
    let module = expand_string_ops(&decompose_expressions(&module, cfg), cfg);
    let program = SourceProgram::new(unparse(&module));
    match evaluate(&program, &item.entry_call, ZOO_EVAL_CEILING)? {
        Outcome::Returned(v) if v.py_eq(&item.expected_output) => {}
        other => {
            return Err(HarnessError::ParseFailure(format!(
                "transformed {} no longer returns {}: {other}",
                item.id(),
                item.expected_rendering
            )))
        }
    }
    Ok(BenchmarkItem { program, ..item.clone() })
}

/// Re-runs only the originally failing items on transformed programs.
pub fn rerun_failures(
    records: &[EvalRecord],
    model: &dyn CompletionModel,
    settings: &EvalSettings,
    cfg: &TransformConfig,
) -> Vec<Result<EvalRecord, HarnessError>> {
    let mut items = Vec::new();
    let mut errors = Vec::new();
    for r in records.iter().filter(|r| r.variant == Variant::Original && r.verdict != Verdict::Correct) {
        match transform_item(&r.item, cfg) {
            Ok(it) => items.push(it),
            Err(e) => errors.push(Err(e)),
        }
    }
    let settings = EvalSettings { variant: Variant::Transformed, ..settings.clone() };
    let mut out = run_eval(&items, model, &settings);
    out.extend(errors);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use tracebench_core::benchgen::{gen_zoo_item, Category};

    #[test]
    fn transformed_items_keep_their_answer() {
        for c in [Category::String, Category::List, Category::Dictionary] {
            let item = gen_zoo_item(c, 3, 2).unwrap();
            let t = transform_item(&item, &TransformConfig::default()).unwrap();
            assert_eq!(t.expected_rendering, item.expected_rendering);
            assert!(t.program.source_text.contains("START_OF_TRACE"), "{}", t.program.source_text);
        }
    }
}
