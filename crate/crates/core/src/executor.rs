//! Driver compilation and child-process execution with edge coverage.
//!
//! The parent compiles a driver against the library surface, then runs it in
//! a separate process (the `run-driver` subcommand of this same binary). The
//! child prints one `EDGE class::method::site::arm` line per first-hit branch
//! edge on stdout plus a final `OK`, reports an escaped exception as JSON on
//! stderr, and exits 0 (normal), 1 (exception), or 2 (internal error). The
//! parent enforces a wall-clock timeout and kills the child on expiry.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write as IoWrite};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::frontend::{self, Extraction};
use crate::lang::interp::{CoverageSink, Interp, Thrown};
use crate::lang::parser::parse_unit;
use crate::lang::sema::{check_driver, ClassTable};
use crate::lang::sites::enumerate_sites;

/// One coverable branch edge, identified structurally.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct EdgeId {
    pub class: String,
    pub method: String,
    pub site: u32,
    pub arm: String,
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}::{}::{}::{}", self.class, self.method, self.site, self.arm)
    }
}

impl EdgeId {
    pub fn parse(text: &str) -> Option<EdgeId> {
        let parts: Vec<&str> = text.split("::").collect();
        let [class, method, site, arm] = parts.as_slice() else {
            return None;
        };
        Some(EdgeId {
            class: class.to_string(),
            method: method.to_string(),
            site: site.parse().ok()?,
            arm: arm.to_string(),
        })
    }
}

impl Serialize for EdgeId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for EdgeId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        EdgeId::parse(&text).ok_or_else(|| serde::de::Error::custom("malformed edge id"))
    }
}

/// The coverable-edge universe of every kept method.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EdgeTable {
    pub per_method: BTreeMap<String, Vec<EdgeId>>,
}

impl EdgeTable {
    pub fn build(extraction: &Extraction) -> EdgeTable {
        let mut per_method = BTreeMap::new();
        for m in &extraction.model.methods {
            let mut edges = Vec::new();
            if let Some((_, decl)) = frontend::method_decl(extraction, m) {
                if let Some(body) = &decl.body {
                    for site in enumerate_sites(body) {
                        for arm in site.arms() {
                            edges.push(EdgeId {
                                class: m.owner_fqn.clone(),
                                method: m.name.clone(),
                                site: site.site,
                                arm,
                            });
                        }
                    }
                }
            }
            per_method.insert(m.method_id.clone(), edges);
        }
        EdgeTable { per_method }
    }

    /// Size of the whole edge universe.
    pub fn total_edges(&self) -> usize {
        self.per_method.values().map(Vec::len).sum()
    }

    pub fn contains(&self, edge: &EdgeId) -> bool {
        self.per_method.values().flatten().any(|e| e == edge)
    }

    pub fn universe_for(&self, method_id: &str) -> &[EdgeId] {
        self.per_method
            .get(method_id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FrameInfo {
    pub class: String,
    pub method: String,
    pub line: u32,
}

/// An exception that escaped the driver, as reported by the child.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExceptionInfo {
    pub exception: String,
    pub message: String,
    /// Innermost frame first.
    pub frames: Vec<FrameInfo>,
}

impl ExceptionInfo {
    pub fn from_thrown(t: &Thrown) -> ExceptionInfo {
        ExceptionInfo {
            exception: t.fqn.clone(),
            message: t.message.clone(),
            frames: t
                .frames
                .iter()
                .map(|f| FrameInfo {
                    class: f.class.clone(),
                    method: f.method.clone(),
                    line: f.line,
                })
                .collect(),
        }
    }

    /// "class.method" of the innermost frame, for deduplication.
    pub fn top_frame(&self) -> String {
        match self.frames.first() {
            Some(f) => format!("{}.{}", f.class, f.method),
            None => "<none>".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    CompileFailed,
    Ok,
    Exception,
    Timeout,
    Crash,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::CompileFailed => "compile_failed",
            RunStatus::Ok => "ok",
            RunStatus::Exception => "exception",
            RunStatus::Timeout => "timeout",
            RunStatus::Crash => "crash",
        }
    }
}

/// The full outcome of one driver attempt.
#[derive(Debug, Clone, Serialize)]
pub struct ExecutionRecord {
    pub status: RunStatus,
    pub edges: BTreeSet<EdgeId>,
    pub exception: Option<ExceptionInfo>,
    pub wall_ms: u64,
    pub diagnostics: Vec<String>,
}

impl ExecutionRecord {
    fn failed(status: RunStatus, diagnostics: Vec<String>) -> ExecutionRecord {
        ExecutionRecord {
            status,
            edges: BTreeSet::new(),
            exception: None,
            wall_ms: 0,
            diagnostics,
        }
    }

    /// A run that produced edges counts as an input; only compile failures
    /// and crashes do not.
    pub fn is_input(&self) -> bool {
        !matches!(self.status, RunStatus::CompileFailed | RunStatus::Crash)
    }
}

/// Typechecks a driver against the already-checked library units, allowing
/// only the public surface.
pub fn compile(extraction: &Extraction, driver_src: &str) -> Result<(), Vec<String>> {
    let driver = parse_unit("Driver.java", driver_src)
        .map_err(|e| vec![format!("parse error: {e}")])?;
    let mut units = extraction.units.clone();
    units.push(driver);
    let table = ClassTable::build(&units);
    let driver_unit = units.last().expect("driver unit");
    let diags = check_driver(&table, driver_unit);
    if diags.is_empty() {
        Ok(())
    } else {
        Err(diags
            .iter()
            .map(|d| format!("line {}: {}", d.line, d.message))
            .collect())
    }
}

pub struct Executor {
    /// Path to this binary; the child is `<runner> run-driver`.
    pub runner: PathBuf,
    pub source_root: PathBuf,
    pub timeout: Duration,
}

impl Executor {
    /// Writes the driver, compiles it, and runs it in a child process.
    pub fn execute(
        &self,
        extraction: &Extraction,
        table: &EdgeTable,
        driver_src: &str,
        driver_path: &Path,
    ) -> ExecutionRecord {
        if let Err(e) = std::fs::write(driver_path, driver_src) {
            return ExecutionRecord::failed(
                RunStatus::Crash,
                vec![format!("could not write driver: {e}")],
            );
        }
        if let Err(diags) = compile(extraction, driver_src) {
            return ExecutionRecord::failed(RunStatus::CompileFailed, diags);
        }
        self.run_compiled(driver_path, table)
    }

    /// Runs an already-compiled driver file under the timeout.
    pub fn run_compiled(&self, driver_path: &Path, table: &EdgeTable) -> ExecutionRecord {
        let start = Instant::now();
        let spawned = Command::new(&self.runner)
            .arg("run-driver")
            .arg("--source")
            .arg(&self.source_root)
            .arg("--driver")
            .arg(driver_path)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn();
        let mut child = match spawned {
            Ok(c) => c,
            Err(e) => {
                return ExecutionRecord::failed(
                    RunStatus::Crash,
                    vec![format!("could not spawn runner: {e}")],
                )
            }
        };
        let stdout = child.stdout.take().expect("piped stdout");
        let stderr = child.stderr.take().expect("piped stderr");
        let out_reader = std::thread::spawn(move || {
            let mut lines = Vec::new();
            for line in BufReader::new(stdout).lines() {
                match line {
                    Ok(l) => lines.push(l),
                    Err(_) => break,
                }
            }
            lines
        });
        let err_reader = std::thread::spawn(move || {
            let mut text = String::new();
            let _ = BufReader::new(stderr).read_to_string(&mut text);
            text
        });

        let mut timed_out = false;
        let exit = loop {
            match child.try_wait() {
                Ok(Some(status)) => break Some(status),
                Ok(None) => {
                    if start.elapsed() >= self.timeout {
                        timed_out = true;
                        let _ = child.kill();
                        let _ = child.wait();
                        break None;
                    }
                    std::thread::sleep(Duration::from_millis(5));
                }
                Err(_) => {
                    let _ = child.kill();
                    let _ = child.wait();
                    break None;
                }
            }
        };
        let wall_ms = start.elapsed().as_millis() as u64;
        let lines = out_reader.join().unwrap_or_default();
        let err_text = err_reader.join().unwrap_or_default();

        let mut edges = BTreeSet::new();
        let mut saw_ok = false;
        for line in &lines {
            if let Some(rest) = line.strip_prefix("EDGE ") {
                if let Some(edge) = EdgeId::parse(rest.trim()) {
                    if table.contains(&edge) {
                        edges.insert(edge);
                    }
                }
            } else if line.trim() == "OK" {
                saw_ok = true;
            }
        }

        let (status, exception, diagnostics) = if timed_out {
            (RunStatus::Timeout, None, vec![])
        } else {
            match exit.and_then(|s| s.code()) {
                Some(0) if saw_ok => (RunStatus::Ok, None, vec![]),
                Some(0) => (
                    RunStatus::Crash,
                    None,
                    vec!["runner exited 0 without completing".into()],
                ),
                Some(1) => match serde_json::from_str::<ExceptionInfo>(err_text.trim()) {
                    Ok(info) => (RunStatus::Exception, Some(info), vec![]),
                    Err(e) => (
                        RunStatus::Crash,
                        None,
                        vec![format!("unreadable exception report: {e}: {err_text}")],
                    ),
                },
                other => (
                    RunStatus::Crash,
                    None,
                    vec![format!(
                        "runner exit {:?}: {}",
                        other,
                        err_text.trim()
                    )],
                ),
            }
        };

        ExecutionRecord {
            status,
            edges,
            exception,
            wall_ms,
            diagnostics,
        }
    }
}

/// Direct calls on the interpreter need far more native stack than a default
/// thread provides in unoptimized builds.
const INTERP_STACK_BYTES: usize = 64 * 1024 * 1024;

struct StdoutSink {
    out: std::io::Stdout,
}

impl CoverageSink for StdoutSink {
    fn edge(&mut self, class: &str, method: &str, site: u32, arm: &str) {
        let _ = writeln!(self.out, "EDGE {class}::{method}::{site}::{arm}");
        let _ = self.out.flush();
    }
}

/// The child side of the runner protocol; returns the process exit code.
pub fn run_driver_main(source_root: &Path, driver_path: &Path) -> i32 {
    let source_root = source_root.to_path_buf();
    let driver_path = driver_path.to_path_buf();
    let handle = std::thread::Builder::new()
        .name("interp".into())
        .stack_size(INTERP_STACK_BYTES)
        .spawn(move || child_run(&source_root, &driver_path));
    match handle {
        Ok(h) => h.join().unwrap_or(2),
        Err(e) => {
            eprintln!("could not start interpreter thread: {e}");
            2
        }
    }
}

fn child_run(source_root: &Path, driver_path: &Path) -> i32 {
    let sources = match frontend::load_sources(source_root) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("could not read sources: {e}");
            return 2;
        }
    };
    let mut units = Vec::new();
    for (path, text) in &sources {
        // Unparseable library files were already diagnosed at extraction;
        // the surface the driver compiled against excludes them.
        if let Ok(u) = parse_unit(path, text) {
            units.push(u);
        }
    }
    let driver_src = match std::fs::read_to_string(driver_path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("could not read driver: {e}");
            return 2;
        }
    };
    match parse_unit("Driver.java", &driver_src) {
        Ok(u) => units.push(u),
        Err(e) => {
            eprintln!("parse driver: {e}");
            return 2;
        }
    }
    let table = ClassTable::build(&units);
    let mut sink = StdoutSink {
        out: std::io::stdout(),
    };
    let result = {
        let mut interp = Interp::new(&table, &units, &mut sink);
        interp.call_static("Driver", "main", vec![])
    };
    match result {
        Ok(_) => {
            // A vanished parent (closed pipe) is not worth a panic.
            let _ = writeln!(std::io::stdout(), "OK");
            0
        }
        Err(thrown) => {
            let info = ExceptionInfo::from_thrown(&thrown);
            match serde_json::to_string(&info) {
                Ok(json) => eprintln!("{json}"),
                Err(e) => {
                    eprintln!("could not encode exception report: {e}");
                    return 2;
                }
            }
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::extract;

    fn fixture() -> Extraction {
        let src = r#"package lab;

public class Gate {
    int limit;

    public Gate(int limit) { this.limit = limit; }

    public int clamp(int v) {
        if (v > this.limit) { return this.limit; }
        return v;
    }

    public int route(int k) {
        switch (k) {
            case 1: return 10;
            case 2: return 20;
            default: return 0;
        }
    }

    int hidden(int v) { if (v > 0) { return 1; } return 0; }
}
"#;
        extract(
            vec![("lab/Gate.java".to_string(), src.to_string())],
            "lab",
            "1.0",
            1,
        )
    }

    #[test]
    fn edge_table_expands_arms_per_site() {
        let ex = fixture();
        let table = EdgeTable::build(&ex);
        assert_eq!(table.universe_for("lab.Gate::clamp(int)").len(), 2);
        assert_eq!(table.universe_for("lab.Gate::route(int)").len(), 3);
        assert_eq!(table.total_edges(), 5);
        assert!(table.contains(&EdgeId::parse("lab.Gate::route::0::case1").unwrap()));
        assert!(!table.contains(&EdgeId::parse("lab.Gate::route::0::case9").unwrap()));
    }

    #[test]
    fn edge_id_round_trips_through_display() {
        let edge = EdgeId {
            class: "a.b.C".into(),
            method: "m".into(),
            site: 3,
            arm: "false".into(),
        };
        assert_eq!(EdgeId::parse(&edge.to_string()), Some(edge));
        assert_eq!(EdgeId::parse("only::three::parts"), None);
        assert_eq!(EdgeId::parse("a::m::notanumber::true"), None);
    }

    #[test]
    fn edge_id_serializes_as_string() {
        let edge = EdgeId::parse("lab.Gate::clamp::0::true").unwrap();
        let json = serde_json::to_string(&edge).unwrap();
        assert_eq!(json, "\"lab.Gate::clamp::0::true\"");
        assert_eq!(serde_json::from_str::<EdgeId>(&json).unwrap(), edge);
    }

    #[test]
    fn valid_driver_compiles() {
        let ex = fixture();
        let driver = "import lab.Gate;\n\npublic class Driver {\n    public static void main() {\n        Gate receiver = new Gate(5);\n        int out = receiver.clamp(9);\n    }\n}\n";
        assert!(compile(&ex, driver).is_ok());
    }

    #[test]
    fn undefined_variable_fails_compilation() {
        let ex = fixture();
        let driver = "import lab.Gate;\n\npublic class Driver {\n    public static void main() {\n        Gate receiver = new Gate(5);\n        int out = receiver.clamp(mystery);\n    }\n}\n";
        let diags = compile(&ex, driver).unwrap_err();
        assert!(diags.iter().any(|d| d.contains("mystery")));
    }

    #[test]
    fn drivers_see_only_the_public_surface() {
        let ex = fixture();
        let driver = "import lab.Gate;\n\npublic class Driver {\n    public static void main() {\n        Gate receiver = new Gate(5);\n        int out = receiver.hidden(1);\n    }\n}\n";
        assert!(compile(&ex, driver).is_err());
    }

    #[test]
    fn execution_record_input_classification() {
        assert!(!ExecutionRecord::failed(RunStatus::CompileFailed, vec![]).is_input());
        assert!(!ExecutionRecord::failed(RunStatus::Crash, vec![]).is_input());
        assert!(ExecutionRecord::failed(RunStatus::Timeout, vec![]).is_input());
        assert!(ExecutionRecord::failed(RunStatus::Ok, vec![]).is_input());
    }
}
