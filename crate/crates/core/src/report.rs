//! Exception triage and coverage metrics.
//!
//! Triage deduplicates observed exceptions by (method, exception type,
//! innermost frame) and then classifies each: declared in the method's doc
//! (rule 1), declared in its throws clause (rule 2), or undeclared. The two
//! declared buckets are filtered as expected behavior; the undeclared rest
//! are the candidates worth human attention. Subtype matches count as
//! declared: a documented IndexOutOfBoundsException covers a thrown
//! ArrayIndexOutOfBoundsException.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::executor::{EdgeId, ExceptionInfo, ExecutionRecord, RunStatus};
use crate::lang::builtin_extends;
use crate::model::ApiModel;

/// One observed escape of an exception from a driver run.
#[derive(Debug, Clone)]
pub struct ExceptionEvent {
    pub method_id: String,
    pub info: ExceptionInfo,
    /// Label of the driver that produced it, for the report.
    pub driver: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TriageClass {
    /// Worth attention: nothing declared it.
    Undeclared,
    /// Covered by a @throws doc tag.
    DocDeclared,
    /// Covered by the throws clause.
    SignatureDeclared,
}

#[derive(Debug, Clone, Serialize)]
pub struct TriagedException {
    pub method_id: String,
    pub exception: String,
    pub message: String,
    pub top_frame: String,
    pub classification: TriageClass,
    pub occurrences: usize,
    pub drivers: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TriageReport {
    pub total_events: usize,
    pub unique_entries: usize,
    pub events_doc_declared: usize,
    pub events_signature_declared: usize,
    pub events_undeclared: usize,
    /// Undeclared first, then deterministic within each class.
    pub entries: Vec<TriagedException>,
}

/// True when `sub` is `sup` or reaches it through model supertypes or the
/// builtin exception hierarchy.
pub fn exception_subtype(model: &ApiModel, sub: &str, sup: &str) -> bool {
    let mut seen = BTreeSet::new();
    let mut queue = vec![sub.to_string()];
    while let Some(cur) = queue.pop() {
        if cur == sup {
            return true;
        }
        if !seen.insert(cur.clone()) {
            continue;
        }
        match model.types.get(&cur) {
            Some(t) => queue.extend(t.supertypes.iter().cloned()),
            None => {
                if builtin_extends(&cur, sup) {
                    return true;
                }
            }
        }
    }
    false
}

fn classify(model: &ApiModel, method_id: &str, exception: &str) -> TriageClass {
    let Some(method) = model.methods.iter().find(|m| m.method_id == method_id) else {
        return TriageClass::Undeclared;
    };
    if method
        .doc_throws
        .iter()
        .any(|d| exception_subtype(model, exception, &d.exception))
    {
        return TriageClass::DocDeclared;
    }
    if method
        .throws
        .iter()
        .any(|t| exception_subtype(model, exception, t))
    {
        return TriageClass::SignatureDeclared;
    }
    TriageClass::Undeclared
}

pub fn triage(model: &ApiModel, events: &[ExceptionEvent]) -> TriageReport {
    let mut groups: BTreeMap<(String, String, String), (ExceptionEvent, usize, Vec<String>)> =
        BTreeMap::new();
    for event in events {
        let key = (
            event.method_id.clone(),
            event.info.exception.clone(),
            event.info.top_frame(),
        );
        let entry = groups
            .entry(key)
            .or_insert_with(|| (event.clone(), 0, Vec::new()));
        entry.1 += 1;
        if !entry.2.contains(&event.driver) {
            entry.2.push(event.driver.clone());
        }
    }

    let mut entries = Vec::new();
    let (mut doc, mut sig, mut und) = (0usize, 0usize, 0usize);
    for ((method_id, exception, top_frame), (first, occurrences, drivers)) in groups {
        let classification = classify(model, &method_id, &exception);
        match classification {
            TriageClass::DocDeclared => doc += occurrences,
            TriageClass::SignatureDeclared => sig += occurrences,
            TriageClass::Undeclared => und += occurrences,
        }
        entries.push(TriagedException {
            method_id,
            exception,
            message: first.info.message.clone(),
            top_frame,
            classification,
            occurrences,
            drivers,
        });
    }
    entries.sort_by(|a, b| {
        (a.classification, &a.method_id, &a.exception, &a.top_frame).cmp(&(
            b.classification,
            &b.method_id,
            &b.exception,
            &b.top_frame,
        ))
    });

    TriageReport {
        total_events: events.len(),
        unique_entries: entries.len(),
        events_doc_declared: doc,
        events_signature_declared: sig,
        events_undeclared: und,
        entries,
    }
}

/// Coverage and validity numbers for one library (or the overall union).
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MetricsRow {
    pub library: String,
    pub methods: usize,
    pub drivers_total: usize,
    pub compile_failed: usize,
    pub n_input: usize,
    pub invalid_input_ratio: f64,
    pub n_edge: usize,
    pub edge_universe: usize,
    /// None when there were no valid inputs.
    pub edge_per_input: Option<f64>,
}

fn ratios(row: &mut MetricsRow) {
    row.invalid_input_ratio = if row.drivers_total == 0 {
        0.0
    } else {
        row.compile_failed as f64 / row.drivers_total as f64
    };
    row.edge_per_input = if row.n_input == 0 {
        None
    } else {
        Some(row.n_edge as f64 / row.n_input as f64)
    };
}

/// Aggregates execution records into one row. `n_edge` is the size of the
/// union of covered edges, not a sum over drivers.
pub fn compute_metrics(
    library: &str,
    methods: usize,
    records: &[ExecutionRecord],
    edge_universe: usize,
) -> MetricsRow {
    let mut union: BTreeSet<&EdgeId> = BTreeSet::new();
    for r in records {
        union.extend(r.edges.iter());
    }
    let mut row = MetricsRow {
        library: library.to_string(),
        methods,
        drivers_total: records.len(),
        compile_failed: records
            .iter()
            .filter(|r| r.status == RunStatus::CompileFailed)
            .count(),
        n_input: records.iter().filter(|r| r.is_input()).count(),
        invalid_input_ratio: 0.0,
        n_edge: union.len(),
        edge_universe,
        edge_per_input: None,
    };
    ratios(&mut row);
    row
}

/// Builds a row from already-aggregated counts.
pub fn from_counts(
    library: &str,
    methods: usize,
    drivers_total: usize,
    compile_failed: usize,
    n_input: usize,
    n_edge: usize,
    edge_universe: usize,
) -> MetricsRow {
    let mut row = MetricsRow {
        library: library.to_string(),
        methods,
        drivers_total,
        compile_failed,
        n_input,
        invalid_input_ratio: 0.0,
        n_edge,
        edge_universe,
        edge_per_input: None,
    };
    ratios(&mut row);
    row
}

/// Sums rows from disjoint libraries into an overall row. Edge universes of
/// different libraries never overlap, so counts add.
pub fn overall(rows: &[MetricsRow]) -> MetricsRow {
    let mut row = MetricsRow {
        library: "overall".to_string(),
        methods: rows.iter().map(|r| r.methods).sum(),
        drivers_total: rows.iter().map(|r| r.drivers_total).sum(),
        compile_failed: rows.iter().map(|r| r.compile_failed).sum(),
        n_input: rows.iter().map(|r| r.n_input).sum(),
        invalid_input_ratio: 0.0,
        n_edge: rows.iter().map(|r| r.n_edge).sum(),
        edge_universe: rows.iter().map(|r| r.edge_universe).sum(),
        edge_per_input: None,
    };
    ratios(&mut row);
    row
}

pub fn render_text(rows: &[MetricsRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<16} {:>7} {:>8} {:>8} {:>8} {:>7} {:>9} {:>11}\n",
        "library", "methods", "drivers", "invalid", "n_input", "n_edge", "universe", "edge/input"
    ));
    for r in rows {
        let epi = match r.edge_per_input {
            Some(v) => format!("{v:.3}"),
            None => "-".to_string(),
        };
        out.push_str(&format!(
            "{:<16} {:>7} {:>8} {:>8.3} {:>8} {:>7} {:>9} {:>11}\n",
            r.library,
            r.methods,
            r.drivers_total,
            r.invalid_input_ratio,
            r.n_input,
            r.n_edge,
            r.edge_universe,
            epi
        ));
    }
    out
}

pub fn render_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(
        "library,methods,drivers_total,compile_failed,n_input,invalid_input_ratio,n_edge,edge_universe,edge_per_input\n",
    );
    for r in rows {
        let epi = match r.edge_per_input {
            Some(v) => format!("{v:.6}"),
            None => String::new(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{:.6},{},{},{}\n",
            r.library,
            r.methods,
            r.drivers_total,
            r.compile_failed,
            r.n_input,
            r.invalid_input_ratio,
            r.n_edge,
            r.edge_universe,
            epi
        ));
    }
    out
}
