//! Command-line interface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::executor::run_driver_main;
use crate::frontend;
use crate::gateway::{Gateway, GatewayConfig, Mode, PriceTable, StubScript};
use crate::pipeline::{render_report_text, run_pipeline, PipelineConfig, PipelineMode};

pub const API_KEY_ENV: &str = "PARTGEN_API_KEY";

#[derive(Parser)]
#[command(
    name = "partgen",
    about = "Partition-guided test generation for Java-style libraries",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the public API surface of a source tree.
    Extract(ExtractArgs),
    /// Generate, run, and score test drivers.
    Test(TestArgs),
    /// Re-run a recorded session from its prompt cache.
    Replay(TestArgs),
    /// Render the metrics table from an existing run directory.
    Report(ReportArgs),
    /// Execute one driver in-process and print covered edges (runner child).
    RunDriver(RunDriverArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// Library source root.
    #[arg(long)]
    source: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long = "library-name", default_value = "library")]
    library_name: String,
    #[arg(long = "lib-version", default_value = "0.0.0")]
    lib_version: String,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct TestArgs {
    /// Library source root.
    #[arg(long)]
    source: PathBuf,
    /// Output directory for drivers, records, and reports.
    #[arg(long)]
    out: PathBuf,
    /// Pipeline variant: full, no-tda, no-isp, baseline, or cg.
    #[arg(long, default_value = "full")]
    mode: String,
    /// Prompt source: live, record, replay, or stub.
    #[arg(long, default_value = "stub")]
    gateway: String,
    /// Scripted responses for stub mode.
    #[arg(long = "stub-file")]
    stub_file: Option<PathBuf>,
    /// Prompt record cache (written in record mode, read in replay mode).
    #[arg(long = "cache-dir")]
    cache_dir: Option<PathBuf>,
    /// Extra directory to copy prompt records into, regardless of mode.
    #[arg(long = "record-dir")]
    record_dir: Option<PathBuf>,
    /// Per-driver wall clock budget in milliseconds.
    #[arg(long, default_value_t = 2000)]
    timeout: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Limit constructor search depth in the type dependency graph.
    #[arg(long = "depth-bound")]
    depth_bound: Option<usize>,
    #[arg(long = "library-name", default_value = "library")]
    library_name: String,
    #[arg(long = "lib-version", default_value = "0.0.0")]
    lib_version: String,
    /// Driver template file with {{imports}}, {{statements}}, {{invocation}}.
    #[arg(long)]
    template: Option<PathBuf>,
    /// Also write the type dependency graph as Graphviz.
    #[arg(long = "dump-tdg", default_value_t = false)]
    dump_tdg: bool,
    /// Completion endpoint for live or record mode.
    #[arg(long)]
    endpoint: Option<String>,
    /// Model name for live or record mode.
    #[arg(long)]
    model: Option<String>,
    /// JSON file with endpoint, model, prices, backoff, and rate settings.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directory containing report.json.
    #[arg(long)]
    out: PathBuf,
    /// Print the CSV row instead of the text table.
    #[arg(long, default_value_t = false)]
    csv: bool,
}

#[derive(Args)]
struct RunDriverArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    driver: PathBuf,
}

#[derive(Debug, Default, serde::Deserialize)]
struct FileConfig {
    endpoint: Option<String>,
    model: Option<String>,
    prices: Option<PricesConfig>,
    backoff_base_ms: Option<u64>,
    min_interval_ms: Option<u64>,
}

#[derive(Debug, serde::Deserialize)]
struct PricesConfig {
    prompt_per_million: f64,
    completion_per_million: f64,
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // Help and version requests are successful exits.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Extract(args) => cmd_extract(args),
        Command::Test(args) => cmd_test(args, None),
        Command::Replay(args) => cmd_test(args, Some(Mode::Replay)),
        Command::Report(args) => cmd_report(args),
        Command::RunDriver(args) => run_driver_main(&args.source, &args.driver),
    }
}

fn cmd_extract(args: ExtractArgs) -> i32 {
    let sources = match frontend::load_sources(&args.source) {
        Ok(s) if !s.is_empty() => s,
        Ok(_) => {
            eprintln!("no .java sources under {}", args.source.display());
            return 1;
        }
        Err(e) => {
            eprintln!("could not read {}: {e}", args.source.display());
            return 1;
        }
    };
    let extraction = frontend::extract(sources, &args.library_name, &args.lib_version, args.workers);
    if let Err(e) = std::fs::create_dir_all(&args.out) {
        eprintln!("could not create {}: {e}", args.out.display());
        return 1;
    }
    if let Err(e) = extraction.model.store(&args.out.join("model.json")) {
        eprintln!("could not write model: {e}");
        return 1;
    }
    for d in &extraction.diagnostics {
        eprintln!("{}:{}: {}", d.path, d.line, d.message);
    }
    println!(
        "{} types, {} methods kept, {} excluded -> {}",
        extraction.model.types.len(),
        extraction.model.methods.len(),
        extraction.excluded.len(),
        args.out.join("model.json").display()
    );
    0
}

fn cmd_test(args: TestArgs, forced_mode: Option<Mode>) -> i32 {
    let mode = match PipelineMode::parse(&args.mode) {
        Some(m) => m,
        None => {
            eprintln!("unknown mode {} (expected full, no-tda, no-isp, baseline, or cg)", args.mode);
            return 1;
        }
    };
    let gateway_mode = match forced_mode {
        Some(m) => m,
        None => match args.gateway.as_str() {
            "live" => Mode::Live,
            "record" => Mode::Record,
            "replay" => Mode::Replay,
            "stub" => Mode::Stub,
            other => {
                eprintln!("unknown gateway {other} (expected live, record, replay, or stub)");
                return 1;
            }
        },
    };

    let file_config: FileConfig = match &args.config {
        Some(path) => match std::fs::read_to_string(path)
            .map_err(|e| e.to_string())
            .and_then(|t| serde_json::from_str(&t).map_err(|e| e.to_string()))
        {
            Ok(c) => c,
            Err(e) => {
                eprintln!("could not read config {}: {e}", path.display());
                return 1;
            }
        },
        None => FileConfig::default(),
    };

    let stub = match &args.stub_file {
        Some(path) => match StubScript::load(path) {
            Ok(s) => Some(s),
            Err(e) => {
                eprintln!("could not load stub file {}: {e}", path.display());
                return 1;
            }
        },
        None => None,
    };
    if gateway_mode == Mode::Stub && stub.is_none() {
        eprintln!("stub gateway needs --stub-file");
        return 1;
    }
    if matches!(gateway_mode, Mode::Replay) && args.cache_dir.is_none() {
        eprintln!("replay needs --cache-dir");
        return 1;
    }
    let template = match &args.template {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("could not read template {}: {e}", path.display());
                return 1;
            }
        },
        None => None,
    };

    let gateway = Gateway::new(GatewayConfig {
        mode: gateway_mode,
        endpoint: args
            .endpoint
            .or(file_config.endpoint)
            .unwrap_or_default(),
        model: args.model.or(file_config.model).unwrap_or_default(),
        api_key: std::env::var(API_KEY_ENV).unwrap_or_default(),
        cache_dir: args.cache_dir.clone(),
        record_dir: args.record_dir.clone(),
        stub,
        backoff_base_ms: file_config.backoff_base_ms.unwrap_or(250),
        min_interval_ms: file_config.min_interval_ms.unwrap_or(0),
    });

    let runner = match std::env::current_exe() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("could not locate own binary: {e}");
            return 1;
        }
    };
    let config = PipelineConfig {
        mode,
        library: args.library_name,
        version: args.lib_version,
        source_root: args.source,
        out_dir: args.out,
        workers: args.workers,
        depth_bound: args.depth_bound,
        timeout_ms: args.timeout,
        runner,
        template,
        dump_tdg: args.dump_tdg,
        prices: file_config.prices.map(|p| PriceTable {
            prompt_per_million: p.prompt_per_million,
            completion_per_million: p.completion_per_million,
        }),
    };

    match run_pipeline(&config, &gateway) {
        Ok(summary) => {
            print!("{}", render_report_text(&summary.report));
            0
        }
        Err(e) => {
            eprintln!("pipeline failed: {e}");
            1
        }
    }
}

fn cmd_report(args: ReportArgs) -> i32 {
    let path = args.out.join("report.json");
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("could not read {}: {e}", path.display());
            return 1;
        }
    };
    let report: serde_json::Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("malformed {}: {e}", path.display());
            return 1;
        }
    };
    if args.csv {
        let csv_path = args.out.join("report.csv");
        match std::fs::read_to_string(&csv_path) {
            Ok(csv) => print!("{csv}"),
            Err(e) => {
                eprintln!("could not read {}: {e}", csv_path.display());
                return 1;
            }
        }
    } else {
        let txt_path = args.out.join("report.txt");
        match std::fs::read_to_string(&txt_path) {
            Ok(t) => print!("{t}"),
            Err(_) => {
                // Fall back to the always-present summary numbers.
                let m = &report["metrics"];
                println!(
                    "{} {}: {} drivers, {} inputs, {} edges",
                    report["library"].as_str().unwrap_or("?"),
                    report["mode"].as_str().unwrap_or("?"),
                    m["drivers_total"],
                    m["n_input"],
                    m["n_edge"]
                );
            }
        }
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_subcommand_exits_nonzero() {
        assert_ne!(run(["partgen", "frobnicate"]), 0);
    }

    #[test]
    fn help_is_a_successful_exit() {
        assert_eq!(run(["partgen", "--help"]), 0);
    }

    #[test]
    fn stub_gateway_requires_a_stub_file() {
        let code = run([
            "partgen", "test", "--source", "/nonexistent", "--out", "/tmp/x",
        ]);
        assert_eq!(code, 1);
    }

    #[test]
    fn bad_mode_is_rejected() {
        let code = run([
            "partgen",
            "test",
            "--source",
            "/nonexistent",
            "--out",
            "/tmp/x",
            "--mode",
            "sideways",
        ]);
        assert_eq!(code, 1);
    }
}
