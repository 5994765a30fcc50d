//! Static reports over a set of records.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eval::{EvalRecord, Variant, Verdict};
use crate::taxonomy::{type_distribution, TaxonomyTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Html,
    Text,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "html" => Ok(ReportFormat::Html),
            "text" | "txt" => Ok(ReportFormat::Text),
            _ => Err(format!("unknown report format `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub group: String,
    pub samples: usize,
    pub max_tokens: usize,
    pub correct_pct: f64,
    pub wrong_pct: f64,
    pub truncated_pct: f64,
    /// Accuracy once failing items were re-run transformed.
    pub after_pct: Option<f64>,
    /// `after_pct - correct_pct`, in points.
    pub delta: Option<f64>,
    /// Mean per-step accuracy of teacher-forced records.
    pub step_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub overall: SummaryRow,
}

fn group_of(r: &EvalRecord) -> String {
    let it = &r.item;
    format!("{}/{}/d{}", it.family, it.category, it.depth)
}

fn row(group: String, originals: &[&EvalRecord], after: &HashMap<String, Verdict>) -> SummaryRow {
    let n = originals.len();
    let pct = |k: usize| if n == 0 { 0.0 } else { 100.0 * k as f64 / n as f64 };
    let count = |v: Verdict| originals.iter().filter(|r| r.verdict == v).count();
    let correct = count(Verdict::Correct);
    let touched = originals.iter().any(|r| after.contains_key(&r.item.id()));
    let after_pct = touched.then(|| {
        pct(originals
            .iter()
            .filter(|r| after.get(&r.item.id()).copied().unwrap_or(r.verdict) == Verdict::Correct)
            .count())
    });
    let steps: Vec<f64> = originals.iter().filter_map(|r| r.step_accuracy()).collect();
    SummaryRow {
        group,
        samples: n,
        max_tokens: originals.iter().map(|r| r.max_tokens).max().unwrap_or(0),
        correct_pct: pct(correct),
        wrong_pct: pct(count(Verdict::Wrong)),
        truncated_pct: pct(count(Verdict::Truncated)),
        after_pct,
        delta: after_pct.map(|a| a - pct(correct)),
        step_accuracy: (!steps.is_empty()).then(|| 100.0 * steps.iter().sum::<f64>() / steps.len() as f64),
    }
}

pub fn summarize(records: &[EvalRecord]) -> Summary {
    let after: HashMap<String, Verdict> = records
        .iter()
        .filter(|r| r.variant == Variant::Transformed)
        .map(|r| (r.item.id(), r.verdict))
        .collect();
    let originals: Vec<&EvalRecord> = records.iter().filter(|r| r.variant == Variant::Original).collect();
    let mut groups: BTreeMap<String, Vec<&EvalRecord>> = BTreeMap::new();
    for r in &originals {
        groups.entry(group_of(r)).or_default().push(r);
    }
    Summary {
        rows: groups.into_iter().map(|(g, rs)| row(g, &rs, &after)).collect(),
        overall: row("all".into(), &originals, &after),
    }
}

#[derive(Serialize)]
struct Document<'a> {
    summary: Summary,
    taxonomy: TaxonomyTable,
    items: Vec<DrillDown<'a>>,
}

#[derive(Serialize)]
struct DrillDown<'a> {
    id: String,
    variant: Variant,
    verdict: Verdict,
    output_type: &'a str,
    expected: &'a str,
    parsed_answer: Option<&'a str>,
    diff: String,
    prompt: &'a str,
    completion: &'a str,
    first_bad_action: Option<usize>,
    discontinuity: Option<bool>,
}

fn diff_line(r: &EvalRecord) -> String {
    match (&r.parsed_answer, r.verdict) {
        (_, Verdict::Correct) => String::new(),
        (Some(got), _) => format!("- {}\n+ {got}", r.expected),
        (None, Verdict::Truncated) => format!("- {}\n+ (truncated)", r.expected),
        (None, _) => format!("- {}\n+ (no answer)", r.expected),
    }
}

pub fn emit_report(records: &[EvalRecord], format: ReportFormat) -> String {
    let originals: Vec<EvalRecord> = records.iter().filter(|r| r.variant == Variant::Original).cloned().collect();
    let doc = Document {
        summary: summarize(records),
        taxonomy: type_distribution(&originals),
        items: records
            .iter()
            .map(|r| DrillDown {
                id: r.item.id(),
                variant: r.variant,
                verdict: r.verdict,
                output_type: &r.output_type,
                expected: &r.expected,
                parsed_answer: r.parsed_answer.as_deref(),
                diff: diff_line(r),
                prompt: &r.prompt,
                completion: &r.completion,
                first_bad_action: r.first_bad_action,
                discontinuity: r.discontinuity,
            })
            .collect(),
    };
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(&doc).expect("report serializes"),
        ReportFormat::Text => text(&doc),
        ReportFormat::Html => html(&doc),
    }
}

fn opt_pct(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.1}"))
}

fn delta_cell(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:+.1}"))
}

const SUMMARY_HEAD: [&str; 9] =
    ["group", "samples", "max tokens", "correct %", "wrong %", "truncated %", "after %", "delta", "step acc %"];

fn summary_cells(r: &SummaryRow) -> [String; 9] {
    [
        r.group.clone(),
        r.samples.to_string(),
        r.max_tokens.to_string(),
        format!("{:.1}", r.correct_pct),
        format!("{:.1}", r.wrong_pct),
        format!("{:.1}", r.truncated_pct),
        opt_pct(r.after_pct),
        delta_cell(r.delta),
        opt_pct(r.step_accuracy),
    ]
}

fn text(doc: &Document) -> String {
    let mut out = String::from("Summary\n");
    let mut rows: Vec<[String; 9]> = vec![SUMMARY_HEAD.map(String::from)];
    rows.extend(doc.summary.rows.iter().map(summary_cells));
    rows.push(summary_cells(&doc.summary.overall));
    let widths: Vec<usize> = (0..9).map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
    for r in &rows {
        let cells: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "  {}", cells.join("  ").trim_end());
    }
    let t = &doc.taxonomy;
    let _ = writeln!(out, "\nOutput types ({} samples, {} wrong answers)", t.samples, t.failures);
    let _ = writeln!(out, "  {:<10} {:>11} {:>10} {:>7}", "type", "benchmark %", "failure %", "ratio");
    for r in &t.rows {
        let _ = writeln!(
            out,
            "  {:<10} {:>11.1} {:>10.1} {:>7}",
            r.type_tag,
            r.benchmark_pct,
            r.failure_pct,
            r.ratio_cell()
        );
    }
    let _ = writeln!(out, "\nItems");
    for it in &doc.items {
        let _ = writeln!(out, "  {} [{:?}] {} ({})", it.id, it.variant, it.verdict, it.output_type);
        for l in it.diff.lines() {
            let _ = writeln!(out, "    {l}");
        }
    }
    out
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

fn html(doc: &Document) -> String {
    let mut out = String::from(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Evaluation report</title>\n<style>\
         body{font-family:sans-serif;margin:2em}table{border-collapse:collapse}td,th{border:1px solid #bbb;padding:2px 8px}\
         pre{background:#f4f4f4;padding:6px;white-space:pre-wrap}.correct{color:#170}.wrong{color:#b00}.truncated{color:#a60}\
         </style></head><body>\n<h1>Evaluation report</h1>\n<h2>Summary</h2>\n<table>\n<tr>",
    );
    for h in SUMMARY_HEAD {
        let _ = write!(out, "<th>{h}</th>");
    }
    out.push_str("</tr>\n");
    for r in doc.summary.rows.iter().chain([&doc.summary.overall]) {
        out.push_str("<tr>");
        for c in summary_cells(r) {
            let _ = write!(out, "<td>{}</td>", esc(&c));
        }
        out.push_str("</tr>\n");
    }
    let t = &doc.taxonomy;
    let _ = write!(
        out,
        "</table>\n<h2>Output types</h2>\n<p>{} samples, {} wrong answers (truncations excluded)</p>\n<table>\n\
         <tr><th>type</th><th>benchmark %</th><th>failure %</th><th>ratio</th></tr>\n",
        t.samples, t.failures
    );
    for r in &t.rows {
        let _ = writeln!(
            out,
            "<tr><td>{}</td><td>{:.1}</td><td>{:.1}</td><td>{}</td></tr>",
            esc(&r.type_tag),
            r.benchmark_pct,
            r.failure_pct,
            r.ratio_cell()
        );
    }
    out.push_str("</table>\n<h2>Items</h2>\n");
    for it in &doc.items {
        let _ = write!(
            out,
            "<details><summary>{} <span class=\"{v}\">{v}</span> ({})</summary>\n",
            esc(&it.id),
            esc(it.output_type),
            v = it.verdict
        );
        if !it.diff.is_empty() {
            let _ = writeln!(out, "<pre>{}</pre>", esc(&it.diff));
        }
        let _ = write!(
            out,
            "<h4>Prompt</h4><pre>{}</pre>\n<h4>Completion</h4><pre>{}</pre>\n</details>\n",
            esc(it.prompt),
            esc(it.completion)
        );
    }
    out.push_str("</body></html>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{evaluate_baseline, EvalSettings};
    use crate::mock::{CannedModel, OracleModel};
    use tracebench_core::benchgen::{gen_zoo_item, Category};

    fn records() -> Vec<EvalRecord> {
        let s = EvalSettings { max_tokens: 1 << 20, ..EvalSettings::default() };
        let mut out = Vec::new();
        for seed in 0..4 {
            let item = gen_zoo_item(Category::Math, 2, seed).unwrap();
            let rec = if seed % 2 == 0 {
                evaluate_baseline(&item, &OracleModel::new(), &s).unwrap()
            } else {
                evaluate_baseline(&item, &CannedModel::new("[ANSWER]\nassert x == -99999\n[/ANSWER]"), &s).unwrap()
            };
            out.push(rec);
        }
        out
    }

    #[test]
    fn empty_report() {
        let j: serde_json::Value = serde_json::from_str(&emit_report(&[], ReportFormat::Json)).unwrap();
        assert_eq!(j["summary"]["overall"]["samples"], 0);
        assert_eq!(j["summary"]["overall"]["correct_pct"], 0.0);
        assert!(emit_report(&[], ReportFormat::Html).contains("</html>"));
        assert!(emit_report(&[], ReportFormat::Text).contains("Summary"));
    }

    #[test]
    fn delta_after_intervention() {
        let mut recs = records();
        let before = summarize(&recs).overall;
        assert_eq!(before.correct_pct, 50.0);
        assert!(before.delta.is_none());
        // one of the two failures is fixed on the transformed re-run
        let mut fixed = recs[1].clone();
        fixed.variant = Variant::Transformed;
        fixed.verdict = Verdict::Correct;
        let mut still = recs[3].clone();
        still.variant = Variant::Transformed;
        recs.extend([fixed, still]);
        let after = summarize(&recs).overall;
        assert_eq!(after.samples, 4);
        assert_eq!(after.after_pct, Some(75.0));
        assert_eq!(after.delta, Some(25.0));
    }

    #[test]
    fn one_entry_per_record() {
        let recs = records();
        let j: serde_json::Value = serde_json::from_str(&emit_report(&recs, ReportFormat::Json)).unwrap();
        assert_eq!(j["items"].as_array().unwrap().len(), recs.len());
        let html = emit_report(&recs, ReportFormat::Html);
        assert_eq!(html.matches("<details>").count(), recs.len());
        assert!(html.contains("&lt;|frame_sep|&gt;"));
        let text = emit_report(&recs, ReportFormat::Text);
        assert!(text.contains("+ -99999"));
    }
}
