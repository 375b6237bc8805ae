//! Child-process execution behaviors: coverage lines, exception reports,
//! recursion guards, and the wall-clock kill.

use std::path::{Path, PathBuf};
use std::time::Duration;

use partgen::executor::{EdgeTable, Executor, RunStatus};
use partgen::frontend::{self, Extraction};
use partgen::model::ApiModel;
use partgen::report::{triage, ExceptionEvent, TriageClass};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn load(name: &str) -> (Extraction, EdgeTable) {
    let sources = frontend::load_sources(&fixture(name)).unwrap();
    let extraction = frontend::extract(sources, name, "1.0", 1);
    let table = EdgeTable::build(&extraction);
    (extraction, table)
}

fn executor(name: &str, timeout_ms: u64) -> Executor {
    Executor {
        runner: PathBuf::from(env!("CARGO_BIN_EXE_partgen")),
        source_root: fixture(name),
        timeout: Duration::from_millis(timeout_ms),
    }
}

fn run(name: &str, timeout_ms: u64, driver: &str) -> partgen::executor::ExecutionRecord {
    let (extraction, table) = load(name);
    let out = tempfile::tempdir().unwrap();
    executor(name, timeout_ms).execute(&extraction, &table, driver, &out.path().join("Driver.java"))
}

#[test]
fn normal_run_reports_first_hit_edges() {
    let record = run(
        "modmath",
        5000,
        "import org.dm.DoubleModMath;\n\npublic class Driver {\n    public static void main() {\n        DoubleModMath receiver = new DoubleModMath();\n        double out = receiver.invert(2.0);\n        double again = receiver.invert(4.0);\n    }\n}\n",
    );
    assert_eq!(record.status, RunStatus::Ok);
    let edges: Vec<String> = record.edges.iter().map(|e| e.to_string()).collect();
    // Two calls, one edge: first-hit reporting dedupes.
    assert_eq!(edges, vec!["org.dm.DoubleModMath::invert::0::false"]);
}

#[test]
fn escaped_exception_is_reported_with_frames() {
    let record = run(
        "modmath",
        5000,
        "import org.dm.DoubleModMath;\n\npublic class Driver {\n    public static void main() {\n        DoubleModMath receiver = new DoubleModMath();\n        double out = receiver.invert(0.0);\n    }\n}\n",
    );
    assert_eq!(record.status, RunStatus::Exception);
    let info = record.exception.expect("exception report");
    assert_eq!(info.exception, "java.lang.ArithmeticException");
    assert_eq!(info.message, "not invertible");
    assert_eq!(info.top_frame(), "org.dm.DoubleModMath.invert");
    // The covered true-arm of the zero check survives the throw.
    assert!(record
        .edges
        .iter()
        .any(|e| e.to_string() == "org.dm.DoubleModMath::invert::0::true"));
}

#[test]
fn runaway_recursion_becomes_stack_overflow_error() {
    let record = run(
        "modmath",
        10000,
        "import org.dm.DoubleModMath;\n\npublic class Driver {\n    public static void main() {\n        DoubleModMath receiver = new DoubleModMath();\n        double out = receiver.modPow(2.0, -1L);\n    }\n}\n",
    );
    assert_eq!(record.status, RunStatus::Exception);
    let info = record.exception.expect("exception report");
    assert_eq!(info.exception, "java.lang.StackOverflowError");
    assert_eq!(info.top_frame(), "org.dm.DoubleModMath.modPow");
    // Trace depth stays capped even though the stack was a thousand deep.
    assert!(info.frames.len() <= 25);
}

#[test]
fn infinite_loop_is_killed_at_the_timeout() {
    let started = std::time::Instant::now();
    let record = run(
        "modmath",
        600,
        "import org.dm.DoubleModMath;\n\npublic class Driver {\n    public static void main() {\n        DoubleModMath receiver = new DoubleModMath();\n        long out = receiver.spin(5L);\n    }\n}\n",
    );
    assert_eq!(record.status, RunStatus::Timeout);
    assert!(record.wall_ms >= 600);
    assert!(started.elapsed() < Duration::from_secs(10));
    // The loop entry edge was flushed before the kill.
    assert!(record
        .edges
        .iter()
        .any(|e| e.to_string() == "org.dm.DoubleModMath::spin::0::true"));
    // A timed-out run still counts as an input.
    assert!(record.is_input());
}

#[test]
fn varargs_packing_and_index_overflow() {
    let (extraction, table) = load("misc");
    let out = tempfile::tempdir().unwrap();
    let exec = executor("misc", 5000);

    // Even-length varargs pack cleanly.
    let ok = exec.execute(
        &extraction,
        &table,
        "import org.misc.Strings;\n\npublic class Driver {\n    public static void main() {\n        String out = Strings.describe(\", \", 1L, 2L, 3L, 4L);\n    }\n}\n",
        &out.path().join("ok.java"),
    );
    assert_eq!(ok.status, RunStatus::Ok);

    // Odd length runs off the end: an undeclared candidate for triage.
    let odd = exec.execute(
        &extraction,
        &table,
        "import org.misc.Strings;\n\npublic class Driver {\n    public static void main() {\n        String out = Strings.describe(\":\", 1L, 2L, 3L);\n    }\n}\n",
        &out.path().join("odd.java"),
    );
    assert_eq!(odd.status, RunStatus::Exception);
    let info = odd.exception.clone().expect("exception report");
    assert_eq!(info.exception, "java.lang.ArrayIndexOutOfBoundsException");

    let report = triage(
        &extraction.model,
        &[ExceptionEvent {
            method_id: "org.misc.Strings::describe(java.lang.String,long[])".into(),
            info,
            driver: "odd".into(),
        }],
    );
    assert_eq!(report.events_undeclared, 1);
    assert_eq!(report.entries[0].classification, TriageClass::Undeclared);
}

#[test]
fn documented_index_overflow_is_filtered_as_expected() {
    let (extraction, table) = load("convert");
    let out = tempfile::tempdir().unwrap();
    let record = executor("convert", 5000).execute(
        &extraction,
        &table,
        "import org.conv.Conversion;\n\npublic class Driver {\n    public static void main() {\n        int[] src = new int[]{1, 2};\n        long out = Conversion.intArrayToLong(src, 0);\n    }\n}\n",
        &out.path().join("short.java"),
    );
    assert_eq!(record.status, RunStatus::Exception);
    let info = record.exception.expect("exception report");
    let report = triage(
        &extraction.model,
        &[ExceptionEvent {
            method_id: "org.conv.Conversion::intArrayToLong(int[],int)".into(),
            info,
            driver: "short".into(),
        }],
    );
    assert_eq!(report.events_doc_declared, 1);
}

#[test]
fn parse_failures_are_diagnosed_but_extraction_continues() {
    let (extraction, _) = load("broken");
    assert_eq!(extraction.diagnostics.len(), 1);
    assert!(extraction.diagnostics[0].path.ends_with("Broken.java"));
    let kept: Vec<&str> = extraction
        .model
        .methods
        .iter()
        .map(|m| m.method_id.as_str())
        .collect();
    assert_eq!(kept, vec!["org.broken.Fine::sign(int)"]);
}

#[test]
fn edge_table_matches_declared_universe() {
    let (_, table) = load("apfloat");
    // pow: 3 two-arm sites; checkPow: 3 ifs each with one &&; signum: 2.
    assert_eq!(
        table
            .universe_for("org.apfloat.Apcomplex::pow(org.apfloat.Apcomplex,org.apfloat.Apcomplex)")
            .len(),
        6
    );
    assert_eq!(
        table
            .universe_for(
                "org.apfloat.Apcomplex::checkPow(org.apfloat.Apcomplex,org.apfloat.Apcomplex)"
            )
            .len(),
        12
    );
    assert_eq!(table.universe_for("org.apfloat.Apfloat::signum()").len(), 4);
    assert_eq!(table.total_edges(), 22);
}

#[test]
fn model_round_trips_through_disk() {
    let (extraction, _) = load("apfloat");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    extraction.model.store(&path).unwrap();
    let loaded = ApiModel::load(&path).unwrap();
    assert_eq!(loaded.methods.len(), extraction.model.methods.len());
    assert_eq!(loaded.types.len(), extraction.model.types.len());
}
