//! JSON and plain-text renderings of experiment results.

use std::collections::BTreeMap;
use std::fmt::Write;

use embgeom_core::concat::RatioReport;
use embgeom_core::probes::{ProbeMetrics, SubspaceComparison};
use embgeom_core::projection::EdgeLengthStat;
use embgeom_core::wsd::WsdScores;
use serde::Serialize;
use serde_json::{json, Value};

pub fn concat_json(r: &RatioReport) -> Value {
    json!({
        "pairs_total": r.pairs_total,
        "probe_applied": r.probe_applied,
        "missing_layers": r.missing_layers,
        "skipped": r.skipped.iter().map(|(i, why)| json!({"pair": i, "reason": why})).collect::<Vec<_>>(),
        "layers": r.layers.iter().map(|l| json!({
            "layer": l.layer,
            "instances": l.instances,
            "mean_individual": finite(l.mean_individual),
            "mean_concatenated": finite(l.mean_concatenated),
            "misclassified_individual": finite(l.misclassified_individual),
            "misclassified_concatenated": finite(l.misclassified_concatenated),
            "flagged": l.flagged,
        })).collect::<Vec<_>>(),
    })
}

/// Tab-separated plot data: one row per layer.
pub fn concat_plot_tsv(r: &RatioReport) -> String {
    let mut out = String::from("layer\tmean_individual\tmean_concatenated\n");
    for l in &r.layers {
        writeln!(out, "{}\t{}\t{}", l.layer, l.mean_individual, l.mean_concatenated).unwrap();
    }
    out
}

pub fn concat_table(r: &RatioReport) -> String {
    let mut out = format!(
        "{:>5}  {:>9}  {:>10}  {:>12}  {:>7}\n",
        "layer", "instances", "individual", "concatenated", "flagged"
    );
    for l in &r.layers {
        writeln!(
            out,
            "{:>5}  {:>9}  {:>10.4}  {:>12.4}  {:>7}",
            l.layer, l.instances, l.mean_individual, l.mean_concatenated, l.flagged
        )
        .unwrap();
    }
    if !r.skipped.is_empty() {
        writeln!(out, "skipped {} of {} pairs", r.skipped.len(), r.pairs_total).unwrap();
    }
    out
}

// NaN and infinities are not JSON; they become null.
fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

#[derive(Debug, Serialize)]
struct ClassJson<'a> {
    class: &'a str,
    precision: Value,
    recall: Value,
    support: usize,
    predicted: usize,
    unseen: bool,
}

pub fn probe_metrics_json(m: &ProbeMetrics) -> Value {
    json!({
        "accuracy": finite(m.accuracy),
        "total": m.total,
        "per_class": m.per_class.iter().map(|c| ClassJson {
            class: &c.class,
            precision: finite(c.precision),
            recall: finite(c.recall),
            support: c.support,
            predicted: c.predicted,
            unseen: c.unseen,
        }).collect::<Vec<_>>(),
    })
}

pub fn probe_metrics_table(m: &ProbeMetrics) -> String {
    let width = m.per_class.iter().map(|c| c.class.len()).max().unwrap_or(5).max(5);
    let mut out = format!("accuracy {:.4} over {} examples\n", m.accuracy, m.total);
    writeln!(
        out,
        "{:<width$}  {:>9}  {:>6}  {:>7}  {:>9}",
        "class", "precision", "recall", "support", "predicted"
    )
    .unwrap();
    for c in &m.per_class {
        let mark = if c.unseen { " (unseen in training)" } else { "" };
        writeln!(
            out,
            "{:<width$}  {:>9.4}  {:>6.4}  {:>7}  {:>9}{mark}",
            c.class, c.precision, c.recall, c.support, c.predicted
        )
        .unwrap();
    }
    out
}

pub fn wsd_json(layer: usize, s: &WsdScores) -> Value {
    json!({
        "layer": layer,
        "total": s.total,
        "answered": s.answered,
        "correct": s.correct,
        "precision": finite(s.precision),
        "recall": finite(s.recall),
        "f1": finite(s.f1),
        "accuracy": finite(s.accuracy),
    })
}

pub fn wsd_table(rows: &[(usize, WsdScores)]) -> String {
    let mut out = format!("{:>5}  {:>7}  {:>8}  {:>7}  {:>6}\n", "layer", "total", "answered", "correct", "f1");
    for (l, s) in rows {
        writeln!(out, "{:>5}  {:>7}  {:>8}  {:>7}  {:>6.4}", l, s.total, s.answered, s.correct, s.f1).unwrap();
    }
    out
}

pub fn subspace_json(c: &SubspaceComparison) -> Value {
    json!({ "inner": c.inner, "outer": c.outer })
}

pub fn edge_lengths_json(t: &BTreeMap<String, EdgeLengthStat>) -> Value {
    Value::Object(
        t.iter()
            .map(|(rel, s)| {
                (
                    rel.clone(),
                    json!({"mean_squared_length": s.mean_squared_length, "count": s.count}),
                )
            })
            .collect(),
    )
}

pub fn edge_lengths_table(t: &BTreeMap<String, EdgeLengthStat>) -> String {
    let width = t.keys().map(|k| k.len()).max().unwrap_or(8).max(8);
    let mut out = format!("{:<width$}  {:>12}  {:>6}\n", "relation", "mean_sq_len", "count");
    let mut rows: Vec<_> = t.iter().collect();
    rows.sort_by(|a, b| a.1.mean_squared_length.total_cmp(&b.1.mean_squared_length));
    for (rel, s) in rows {
        writeln!(out, "{:<width$}  {:>12.4}  {:>6}", rel, s.mean_squared_length, s.count).unwrap();
    }
    out
}
