//! Sequential vs worker-pool throughput on the CPU-bound stages.
//!
//! `extract` measures parsing plus model construction over a replicated
//! source corpus. `pipeline` measures an end-to-end stub run, child
//! processes included. Build with `--no-default-features` to compare the
//! compiled-out fallback against the rayon path.

use std::path::{Path, PathBuf};

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use partgen::frontend;
use partgen::gateway::{Gateway, GatewayConfig, StubScript};
use partgen::pipeline::{run_pipeline, PipelineConfig, PipelineMode};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

// Clones the fixture under fresh package names so the corpus is large
// enough for the pool to matter while every unit still parses.
fn replicated_sources(copies: usize) -> Vec<(String, String)> {
    let base = frontend::load_sources(&fixture("apfloat")).expect("fixture sources");
    let mut out = Vec::with_capacity(base.len() * copies);
    for i in 0..copies {
        for (path, text) in &base {
            out.push((
                format!("v{i}/{path}"),
                text.replace("package org.apfloat;", &format!("package org.apfloat.v{i};")),
            ));
        }
    }
    out
}

fn bench_extract(c: &mut Criterion) {
    let sources = replicated_sources(32);
    let mut group = c.benchmark_group("extract");
    for workers in [1usize, 4] {
        group.bench_with_input(BenchmarkId::from_parameter(workers), &workers, |b, &w| {
            b.iter_batched(
                || sources.clone(),
                |src| frontend::extract(src, "apfloat", "1.0", w),
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn bench_pipeline(c: &mut Criterion) {
    let script = StubScript::load(&fixture("stubs/apfloat.json")).expect("stub script");
    let runner = PathBuf::from(env!("CARGO_BIN_EXE_partgen"));
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    for workers in [1usize, 4] {
        group.bench_with_input(BenchmarkId::from_parameter(workers), &workers, |b, &w| {
            b.iter_batched(
                // Stub cursors advance per run, so each iteration needs its
                // own gateway and a clean output directory.
                || {
                    let gateway = Gateway::new(GatewayConfig::stub_only(script.clone()));
                    let out = tempfile::tempdir().expect("out dir");
                    (gateway, out)
                },
                |(gateway, out)| {
                    let config = PipelineConfig {
                        mode: PipelineMode::Full,
                        library: "apfloat".into(),
                        version: "1.0".into(),
                        source_root: fixture("apfloat"),
                        out_dir: out.path().to_path_buf(),
                        workers: w,
                        depth_bound: None,
                        timeout_ms: 5000,
                        runner: runner.clone(),
                        template: None,
                        dump_tdg: false,
                        prices: None,
                    };
                    run_pipeline(&config, &gateway).expect("pipeline");
                    out
                },
                BatchSize::PerIteration,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, bench_extract, bench_pipeline);
criterion_main!(benches);
