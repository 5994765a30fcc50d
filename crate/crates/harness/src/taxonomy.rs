//! Output-type distribution of a benchmark versus its wrong answers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::eval::{EvalRecord, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyRow {
    pub type_tag: String,
    pub benchmark_count: usize,
    pub failure_count: usize,
    pub benchmark_pct: f64,
    pub failure_pct: f64,
    /// `failure_pct / benchmark_pct`; absent when the type never fails.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyTable {
    pub samples: usize,
    /// Wrong answers only; truncations are left out.
    pub failures: usize,
    pub rows: Vec<TaxonomyRow>,
}

impl TaxonomyTable {
    pub fn row(&self, type_tag: &str) -> Option<&TaxonomyRow> {
        self.rows.iter().find(|r| r.type_tag == type_tag)
    }
}

impl TaxonomyRow {
    /// `1.57x` or `---`.
    pub fn ratio_cell(&self) -> String {
        self.ratio.map_or_else(|| "---".to_string(), |r| format!("{r:.2}x"))
    }
}

pub fn type_distribution(records: &[EvalRecord]) -> TaxonomyTable {
    distribution_of(records.iter().map(|r| (r.output_type.as_str(), r.verdict)))
}

/// The table for bare `(type tag, verdict)` pairs.
pub fn distribution_of<'a>(pairs: impl IntoIterator<Item = (&'a str, Verdict)>) -> TaxonomyTable {
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    let mut samples = 0;
    let mut failures = 0;
    for (tag, verdict) in pairs {
        let c = counts.entry(tag).or_default();
        c.0 += 1;
        samples += 1;
        if verdict == Verdict::Wrong {
            c.1 += 1;
            failures += 1;
        }
    }
    let pct = |n: usize, of: usize| if of == 0 { 0.0 } else { 100.0 * n as f64 / of as f64 };
    let mut rows: Vec<TaxonomyRow> = counts
        .into_iter()
        .map(|(tag, (b, f))| {
            let benchmark_pct = pct(b, samples);
            let failure_pct = pct(f, failures);
            TaxonomyRow {
                type_tag: tag.to_string(),
                benchmark_count: b,
                failure_count: f,
                benchmark_pct,
                failure_pct,
                ratio: (f > 0 && benchmark_pct > 0.0).then(|| failure_pct / benchmark_pct),
            }
        })
        .collect();
    rows.sort_by(|a, b| b.benchmark_count.cmp(&a.benchmark_count).then_with(|| a.type_tag.cmp(&b.type_tag)));
    TaxonomyTable { samples, failures, rows }
}

/// Splits `total` into integer parts proportional to `weights` (largest
/// remainder; ties go to the earlier entry).
pub fn apportion(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut parts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let short = total - parts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        parts[i] += 1;
    }
    parts
}

/// `(type, verdict)` pairs whose marginals follow the given percentage
/// tables: `samples` records, `failures` of them wrong. Errors if a type
/// would need more failures than it has samples.
pub fn synthetic_pairs(
    benchmark_pct: &[(&str, f64)],
    failure_pct: &[(&str, f64)],
    samples: usize,
    failures: usize,
) -> Result<Vec<(String, Verdict)>, String> {
    let bench = apportion(&benchmark_pct.iter().map(|(_, p)| *p).collect::<Vec<_>>(), samples);
    let fail = apportion(&failure_pct.iter().map(|(_, p)| *p).collect::<Vec<_>>(), failures);
    let mut out = Vec::with_capacity(samples);
    for ((tag, _), b) in benchmark_pct.iter().zip(bench) {
        let f = failure_pct
            .iter()
            .zip(&fail)
            .find(|((t, _), _)| t == tag)
            .map_or(0, |(_, &f)| f);
        if f > b {
            return Err(format!("{tag}: {f} failures but only {b} samples"));
        }
        out.extend((0..f).map(|_| (tag.to_string(), Verdict::Wrong)));
        out.extend((0..b - f).map(|_| (tag.to_string(), Verdict::Correct)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_correct_record() {
        let t = distribution_of([("int", Verdict::Correct)]);
        assert_eq!(t.samples, 1);
        assert_eq!(t.failures, 0);
        assert!(t.rows.iter().all(|r| r.failure_count == 0 && r.ratio.is_none()));
        assert_eq!(t.rows[0].ratio_cell(), "---");
    }

    #[test]
    fn truncations_are_not_failures() {
        let t = distribution_of([("str", Verdict::Truncated), ("str", Verdict::Wrong), ("int", Verdict::Correct)]);
        assert_eq!(t.failures, 1);
        let s = t.row("str").unwrap();
        assert_eq!(s.failure_pct, 100.0);
        assert!((s.ratio.unwrap() - 100.0 / (200.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn apportion_examples() {
        assert_eq!(apportion(&[1.0, 1.0, 1.0], 10), vec![4, 3, 3]);
        assert_eq!(apportion(&[46.4, 53.6], 1000), vec![464, 536]);
        assert_eq!(apportion(&[0.0], 0), vec![0]);
    }

    proptest! {
        #[test]
        fn apportion_sums(weights in prop::collection::vec(0.01f64..100.0, 1..10), total in 0usize..5000) {
            let parts = apportion(&weights, total);
            prop_assert_eq!(parts.iter().sum::<usize>(), total);
            let sum: f64 = weights.iter().sum();
            for (p, w) in parts.iter().zip(&weights) {
                prop_assert!((*p as f64 - w / sum * total as f64).abs() < 1.0);
            }
        }

        #[test]
        fn percentages_sum_to_100(pairs in prop::collection::vec((0usize..5, 0usize..3), 1..300)) {
            let tags = ["str", "int", "list", "dict", "bool"];
            let verdicts = [Verdict::Correct, Verdict::Wrong, Verdict::Truncated];
            let t = distribution_of(pairs.iter().map(|&(a, b)| (tags[a], verdicts[b])));
            let b: f64 = t.rows.iter().map(|r| r.benchmark_pct).sum();
            prop_assert!((b - 100.0).abs() < 1e-9);
            if t.failures > 0 {
                let f: f64 = t.rows.iter().map(|r| r.failure_pct).sum();
                prop_assert!((f - 100.0).abs() < 1e-9);
            }
            for r in &t.rows {
                if let Some(ratio) = r.ratio {
                    let again = (r.failure_count as f64 / t.failures as f64) / (r.benchmark_count as f64 / t.samples as f64);
                    prop_assert!((ratio - again).abs() < 1e-9);
                }
            }
        }
    }
}
