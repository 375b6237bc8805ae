//! End-to-end orchestration: extract, plan, partition, instantiate, run,
//! and report.
//!
//! Methods are processed independently (optionally in parallel); all
//! collections and orderings are deterministic, so a replayed run writes a
//! byte-identical report.json. Wall-clock timings never enter the report;
//! the time measure is the sum of recorded gateway latencies.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::executor::{EdgeTable, ExecutionRecord, Executor, RunStatus};
use crate::frontend::{self, Extraction};
use crate::gateway::{Gateway, GatewayError, PriceTable, Stage, UsageTotals};
use crate::instantiator::{
    build_baseline_prompt, build_direct_prompt, build_oi_prompt, emit_driver, lint_slots,
    oi_few_shot, parse_baseline_driver, parse_statements,
};
use crate::model::MethodUnderTest;
use crate::par;
use crate::partitioner::{isp_few_shot, partition_with_context, Partition};
use crate::report::{
    compute_metrics, triage, ExceptionEvent, MetricsRow, TriageReport,
};
use crate::selector::{select_few_shot, Plan, SelectStats, Selector};
use crate::tdg::Tdg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PipelineMode {
    /// Partitioning, constructor planning, then instantiation.
    Full,
    /// Partitioning only; the model picks constructors unguided.
    NoTda,
    /// Constructor planning only; one unconstrained partition per method.
    NoIsp,
    /// One single-prompt driver per method.
    Baseline,
    /// Full, with depth-1 callee sources in the partitioning prompt.
    Cg,
}

impl PipelineMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PipelineMode::Full => "full",
            PipelineMode::NoTda => "no_tda",
            PipelineMode::NoIsp => "no_isp",
            PipelineMode::Baseline => "baseline",
            PipelineMode::Cg => "cg",
        }
    }

    pub fn parse(text: &str) -> Option<PipelineMode> {
        match text.replace('_', "-").as_str() {
            "full" => Some(PipelineMode::Full),
            "no-tda" => Some(PipelineMode::NoTda),
            "no-isp" => Some(PipelineMode::NoIsp),
            "baseline" => Some(PipelineMode::Baseline),
            "cg" => Some(PipelineMode::Cg),
            _ => None,
        }
    }

    fn plans_constructors(self) -> bool {
        matches!(
            self,
            PipelineMode::Full | PipelineMode::NoIsp | PipelineMode::Cg
        )
    }
}

pub struct PipelineConfig {
    pub mode: PipelineMode,
    pub library: String,
    pub version: String,
    pub source_root: PathBuf,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub depth_bound: Option<usize>,
    pub timeout_ms: u64,
    /// Path to the binary providing the run-driver subcommand.
    pub runner: PathBuf,
    pub template: Option<String>,
    pub dump_tdg: bool,
    pub prices: Option<PriceTable>,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("no .java sources under {0}")]
    NoSources(PathBuf),
}

#[derive(Debug, Serialize)]
pub struct DriverOutcome {
    pub label: String,
    /// None when the model response had no usable statement blocks.
    pub source: Option<String>,
    pub record: ExecutionRecord,
}

#[derive(Debug, Serialize)]
pub struct MethodOutcome {
    pub method_id: String,
    pub partitions: Vec<Partition>,
    pub partition_fallback: bool,
    pub plan: Option<Plan>,
    pub drivers: Vec<DriverOutcome>,
    pub notes: Vec<String>,
}

/// Per-method slice of the final report; no timings.
#[derive(Debug, Serialize)]
pub struct MethodReport {
    pub method_id: String,
    pub partitions: usize,
    pub partition_fallback: bool,
    pub drivers: usize,
    pub edges_covered: usize,
    pub edge_universe: usize,
    pub statuses: BTreeMap<String, usize>,
    pub notes: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct ModeReport {
    pub mode: String,
    pub library: String,
    pub version: String,
    pub metrics: MetricsRow,
    pub statuses: BTreeMap<String, usize>,
    pub partitions_total: usize,
    pub partition_fallbacks: usize,
    pub select: SelectStats,
    pub gateway_calls: BTreeMap<String, u64>,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimated_cost: Option<f64>,
    /// Sum of gateway latencies, not wall clock.
    pub time_ms: u64,
    pub triage: TriageReport,
    pub methods: Vec<MethodReport>,
}

pub struct PipelineSummary {
    pub report: ModeReport,
    pub excluded: usize,
    pub out_dir: PathBuf,
}

struct Ctx<'a> {
    config: &'a PipelineConfig,
    gateway: &'a Gateway,
    extraction: &'a Extraction,
    table: &'a EdgeTable,
    tdg: &'a Tdg,
}

/// Directory-safe method label: stable across runs, unique via the index.
fn method_dir_name(index: usize, method_id: &str) -> String {
    let safe: String = method_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '_' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("m{index:03}_{}", safe.trim_matches('_'))
}

pub fn run_pipeline(
    config: &PipelineConfig,
    gateway: &Gateway,
) -> Result<PipelineSummary, PipelineError> {
    let sources = frontend::load_sources(&config.source_root)?;
    if sources.is_empty() {
        return Err(PipelineError::NoSources(config.source_root.clone()));
    }
    let extraction = frontend::extract(sources, &config.library, &config.version, config.workers);
    let table = EdgeTable::build(&extraction);
    let tdg = crate::tdg::build(&extraction.model);

    std::fs::create_dir_all(&config.out_dir)?;
    extraction
        .model
        .store(&config.out_dir.join("model.json"))
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    write_json(&config.out_dir.join("edge_table.json"), &table)?;
    write_json(
        &config.out_dir.join("excluded.json"),
        &extraction.excluded,
    )?;
    let seeds = crate::tdg::seeds_for(&extraction.model);
    let (reachable, truncated) = tdg.reachable_types(&seeds, config.depth_bound);
    write_json(
        &config.out_dir.join("reachable.json"),
        &serde_json::json!({ "types": reachable, "truncated": truncated }),
    )?;
    if config.dump_tdg {
        std::fs::write(config.out_dir.join("tdg.dot"), tdg.to_dot())?;
    }

    let ctx = Ctx {
        config,
        gateway,
        extraction: &extraction,
        table: &table,
        tdg: &tdg,
    };

    let items: Vec<(usize, MethodUnderTest)> = extraction
        .model
        .methods
        .iter()
        .cloned()
        .enumerate()
        .collect();
    let outcomes: Vec<Result<MethodOutcome, PipelineError>> =
        par::map_items(items, config.workers, |(index, method)| {
            process_method(&ctx, index, &method)
        });
    let mut methods = Vec::new();
    for outcome in outcomes {
        methods.push(outcome?);
    }

    let report = assemble_report(&ctx, &methods);
    write_json(&config.out_dir.join("report.json"), &report)?;
    write_json(&config.out_dir.join("triage.json"), &report.triage)?;
    std::fs::write(
        config.out_dir.join("report.txt"),
        render_report_text(&report),
    )?;
    std::fs::write(
        config.out_dir.join("report.csv"),
        crate::report::render_csv(std::slice::from_ref(&report.metrics)),
    )?;
    write_json(
        &config.out_dir.join("usage.json"),
        &usage_json(gateway.totals(), gateway.total_latency_ms(), gateway.network_ops()),
    )?;
    for (index, m) in methods.iter().enumerate() {
        let dir = config
            .out_dir
            .join("methods")
            .join(method_dir_name(index, &m.method_id));
        let ledger: Vec<_> = gateway
            .ledger()
            .into_iter()
            .filter(|r| r.method_id == m.method_id)
            .collect();
        write_json(&dir.join("prompts.json"), &ledger)?;
        write_json(&dir.join("outcome.json"), m)?;
    }

    Ok(PipelineSummary {
        report,
        excluded: extraction.excluded.len(),
        out_dir: config.out_dir.clone(),
    })
}

fn process_method(
    ctx: &Ctx<'_>,
    index: usize,
    method: &MethodUnderTest,
) -> Result<MethodOutcome, PipelineError> {
    let dir = ctx
        .config
        .out_dir
        .join("methods")
        .join(method_dir_name(index, &method.method_id));
    std::fs::create_dir_all(&dir)?;

    let mut notes = Vec::new();

    let plan = if ctx.config.mode.plans_constructors() {
        let selector = Selector {
            gateway: ctx.gateway,
            model: &ctx.extraction.model,
            tdg: ctx.tdg,
            few_shot: &select_few_shot(),
        };
        let plan = selector.plan(method)?;
        write_json(&dir.join("plan.json"), &plan)?;
        Some(plan)
    } else {
        None
    };

    let (partitions, partition_fallback) = match ctx.config.mode {
        PipelineMode::Baseline => (Vec::new(), false),
        PipelineMode::NoIsp => (vec![Partition::unconstrained()], false),
        _ => {
            let include_callees = ctx.config.mode == PipelineMode::Cg;
            let (outcome, callee_notes) = partition_with_context(
                ctx.gateway,
                ctx.extraction,
                method,
                include_callees,
                &isp_few_shot(),
            )?;
            notes.extend(callee_notes);
            // The same partition text twice would only duplicate a driver.
            let mut seen = std::collections::BTreeSet::new();
            let partitions: Vec<Partition> = outcome
                .partitions
                .into_iter()
                .filter(|p| seen.insert(p.raw_text.clone()))
                .collect();
            (partitions, outcome.fallback)
        }
    };
    if !partitions.is_empty() || partition_fallback {
        write_json(
            &dir.join("partitions.json"),
            &serde_json::json!({ "partitions": partitions, "fallback": partition_fallback }),
        )?;
    }

    let executor = Executor {
        runner: ctx.config.runner.clone(),
        source_root: ctx.config.source_root.clone(),
        timeout: std::time::Duration::from_millis(ctx.config.timeout_ms),
    };

    let mut drivers = Vec::new();
    if ctx.config.mode == PipelineMode::Baseline {
        let prompt = build_baseline_prompt(method);
        let resp = ctx
            .gateway
            .complete(Stage::Baseline, &method.method_id, &[], &prompt)?;
        let source = parse_baseline_driver(&resp.text);
        let record = executor.execute(
            ctx.extraction,
            ctx.table,
            &source,
            &dir.join("driver_baseline.java"),
        );
        drivers.push(DriverOutcome {
            label: "baseline".into(),
            source: Some(source),
            record,
        });
    } else {
        for partition in &partitions {
            let label = format!("p{}", partition.ordinal);
            let prompt = match &plan {
                Some(plan) => build_oi_prompt(method, partition, plan),
                None => build_direct_prompt(method, partition),
            };
            let resp = ctx.gateway.complete(
                Stage::Instantiate,
                &method.method_id,
                &oi_few_shot(),
                &prompt,
            )?;
            let outcome = match parse_statements(&resp.text) {
                Ok((imports, statements)) => {
                    if let Some(plan) = &plan {
                        notes.extend(
                            lint_slots(plan, &statements)
                                .into_iter()
                                .map(|w| format!("{label}: {w}")),
                        );
                    }
                    match emit_driver(
                        method,
                        &imports,
                        &statements,
                        ctx.config.template.as_deref(),
                    ) {
                        Ok(source) => {
                            let record = executor.execute(
                                ctx.extraction,
                                ctx.table,
                                &source,
                                &dir.join(format!("driver_{label}.java")),
                            );
                            DriverOutcome {
                                label: label.clone(),
                                source: Some(source),
                                record,
                            }
                        }
                        Err(e) => DriverOutcome {
                            label: label.clone(),
                            source: None,
                            record: compile_reject(format!("driver emission: {e}")),
                        },
                    }
                }
                Err(e) => DriverOutcome {
                    label: label.clone(),
                    source: None,
                    record: compile_reject(format!("response blocks: {e}")),
                },
            };
            drivers.push(outcome);
        }
    }

    let outcome = MethodOutcome {
        method_id: method.method_id.clone(),
        partitions,
        partition_fallback,
        plan,
        drivers,
        notes,
    };
    write_json(&dir.join("results.json"), &outcome.drivers)?;
    Ok(outcome)
}

fn compile_reject(diagnostic: String) -> ExecutionRecord {
    ExecutionRecord {
        status: RunStatus::CompileFailed,
        edges: Default::default(),
        exception: None,
        wall_ms: 0,
        diagnostics: vec![diagnostic],
    }
}

fn assemble_report(ctx: &Ctx<'_>, methods: &[MethodOutcome]) -> ModeReport {
    let mut records: Vec<ExecutionRecord> = Vec::new();
    let mut statuses: BTreeMap<String, usize> = BTreeMap::new();
    let mut events: Vec<ExceptionEvent> = Vec::new();
    let mut select = SelectStats::default();
    let mut partitions_total = 0usize;
    let mut partition_fallbacks = 0usize;
    let mut method_reports = Vec::new();

    for m in methods {
        partitions_total += m.partitions.len();
        if m.partition_fallback {
            partition_fallbacks += 1;
        }
        if let Some(plan) = &m.plan {
            select.select_calls += plan.stats.select_calls;
            select.auto_selected += plan.stats.auto_selected;
            select.fallbacks += plan.stats.fallbacks;
            select.opaque_slots += plan.stats.opaque_slots;
        }
        // A driver can exercise other methods on the way in; per-method
        // counts keep only the method's own edges.
        let universe: std::collections::BTreeSet<_> =
            ctx.table.universe_for(&m.method_id).iter().collect();
        let mut covered = std::collections::BTreeSet::new();
        let mut per_status: BTreeMap<String, usize> = BTreeMap::new();
        for d in &m.drivers {
            *statuses.entry(d.record.status.as_str().to_string()).or_default() += 1;
            *per_status
                .entry(d.record.status.as_str().to_string())
                .or_default() += 1;
            covered.extend(d.record.edges.iter().filter(|e| universe.contains(e)).cloned());
            if let Some(info) = &d.record.exception {
                events.push(ExceptionEvent {
                    method_id: m.method_id.clone(),
                    info: info.clone(),
                    driver: d.label.clone(),
                });
            }
            records.push(d.record.clone());
        }
        method_reports.push(MethodReport {
            method_id: m.method_id.clone(),
            partitions: m.partitions.len(),
            partition_fallback: m.partition_fallback,
            drivers: m.drivers.len(),
            edges_covered: covered.len(),
            edge_universe: ctx.table.universe_for(&m.method_id).len(),
            statuses: per_status,
            notes: m.notes.clone(),
        });
    }

    let metrics = compute_metrics(
        &ctx.config.library,
        methods.len(),
        &records,
        ctx.table.total_edges(),
    );
    let triage_report = triage(&ctx.extraction.model, &events);
    let totals = ctx.gateway.totals();
    let gateway_calls: BTreeMap<String, u64> = totals
        .calls_by_stage
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();

    ModeReport {
        mode: ctx.config.mode.as_str().to_string(),
        library: ctx.config.library.clone(),
        version: ctx.config.version.clone(),
        metrics,
        statuses,
        partitions_total,
        partition_fallbacks,
        select,
        gateway_calls,
        prompt_tokens: totals.prompt_tokens,
        completion_tokens: totals.completion_tokens,
        estimated_cost: ctx
            .config
            .prices
            .as_ref()
            .map(|p| ctx.gateway.estimated_cost(p)),
        time_ms: ctx.gateway.total_latency_ms(),
        triage: triage_report,
        methods: method_reports,
    }
}

pub fn render_report_text(report: &ModeReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "mode {}  library {} {}\n\n",
        report.mode, report.library, report.version
    ));
    out.push_str(&crate::report::render_text(std::slice::from_ref(
        &report.metrics,
    )));
    out.push('\n');
    out.push_str(&format!(
        "partitions {} (fallbacks {})  select calls {} (auto {}, fallback {}, opaque {})\n",
        report.partitions_total,
        report.partition_fallbacks,
        report.select.select_calls,
        report.select.auto_selected,
        report.select.fallbacks,
        report.select.opaque_slots
    ));
    let calls: Vec<String> = report
        .gateway_calls
        .iter()
        .map(|(k, v)| format!("{k} {v}"))
        .collect();
    out.push_str(&format!(
        "gateway calls: {}  tokens {}in/{}out  time {} ms\n",
        if calls.is_empty() {
            "none".to_string()
        } else {
            calls.join(", ")
        },
        report.prompt_tokens,
        report.completion_tokens,
        report.time_ms
    ));
    if let Some(cost) = report.estimated_cost {
        out.push_str(&format!("estimated cost ${cost:.4}\n"));
    }
    out.push_str(&format!(
        "\nexceptions: {} events, {} unique ({} doc-declared, {} signature-declared, {} undeclared)\n",
        report.triage.total_events,
        report.triage.unique_entries,
        report.triage.events_doc_declared,
        report.triage.events_signature_declared,
        report.triage.events_undeclared
    ));
    for entry in &report.triage.entries {
        out.push_str(&format!(
            "  [{:?}] {} threw {} at {} ({}x): {}\n",
            entry.classification,
            entry.method_id,
            entry.exception,
            entry.top_frame,
            entry.occurrences,
            entry.message
        ));
    }
    out.push('\n');
    for m in &report.methods {
        let statuses: Vec<String> = m
            .statuses
            .iter()
            .map(|(k, v)| format!("{k} {v}"))
            .collect();
        out.push_str(&format!(
            "{}: {} partitions, {} drivers, {}/{} edges [{}]\n",
            m.method_id,
            m.partitions,
            m.drivers,
            m.edges_covered,
            m.edge_universe,
            statuses.join(", ")
        ));
    }
    out
}

fn usage_json(totals: UsageTotals, time_ms: u64, network_ops: u64) -> serde_json::Value {
    let calls: BTreeMap<String, u64> = totals
        .calls_by_stage
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
    serde_json::json!({
        "prompt_tokens": totals.prompt_tokens,
        "completion_tokens": totals.completion_tokens,
        "calls_by_stage": calls,
        "time_ms": time_ms,
        "network_ops": network_ops,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_strings_round_trip() {
        for mode in [
            PipelineMode::Full,
            PipelineMode::NoTda,
            PipelineMode::NoIsp,
            PipelineMode::Baseline,
            PipelineMode::Cg,
        ] {
            let text = mode.as_str().replace('_', "-");
            assert_eq!(PipelineMode::parse(&text), Some(mode));
        }
        assert_eq!(PipelineMode::parse("no_tda"), Some(PipelineMode::NoTda));
        assert_eq!(PipelineMode::parse("bogus"), None);
    }

    #[test]
    fn method_dir_names_are_fs_safe_and_ordered() {
        let name = method_dir_name(4, "a.B::m(c.D,int[])");
        assert_eq!(name, "m004_a.B__m_c.D_int");
        assert!(!name.contains(['(', ')', ':']));
    }
}
