//! Shared fixtures for the integration suites.
#![allow(dead_code)]

use protean::driver::{ApplyConfig, CostModelSpec, DriverConfig, EngineChoice};
use protean::ir::FeatureSchema;
use protean::proc::CommandTemplate;
use protean::recipe::SubsequenceLibrary;
use protean::search::{AnnealerConfig, CoolingSchedule};
use std::path::{Path, PathBuf};

pub fn stub_bin() -> &'static str {
    env!("CARGO_BIN_EXE_protean-stub")
}

pub fn protean_bin() -> &'static str {
    env!("CARGO_BIN_EXE_protean")
}

/// Optimizer template running the stub with a given behavior.
pub fn stub_optimizer(behavior: &str) -> CommandTemplate {
    CommandTemplate::parse(&format!(
        "{} opt {behavior} {{input}} {{output}} {{pipeline}}",
        stub_bin()
    ))
    .unwrap()
}

/// Five single-token pipelines; distinct recipes expand to distinct
/// pipeline strings.
pub fn tiny_library() -> SubsequenceLibrary {
    SubsequenceLibrary::new(
        "tiny",
        ('A'..='E')
            .map(|id| (id, format!("pass-{}", id.to_ascii_lowercase())))
            .collect(),
    )
    .unwrap()
}

/// A small, well-formed module in the parseable subset: `extra` appends
/// distinct padding functions so inputs differ.
pub fn fixture_ir(extra: usize) -> String {
    let mut text = String::from(
        "source_filename = \"fixture.c\"\n\n@counter = global i64 0\n\ndefine i64 @main() {\nentry:\n  br label %head\nhead:\n  %i = phi i64 [ 0, %entry ], [ %next, %body ]\n  %cmp = icmp slt i64 %i, 64\n  br i1 %cmp, label %body, label %done\nbody:\n  %v = load i64, ptr @counter\n  %sum = add i64 %v, 1\n  store i64 %sum, ptr @counter\n  %next = add i64 %i, 1\n  br label %head\ndone:\n  ret i64 0\n}\n",
    );
    for i in 0..extra {
        text.push_str(&format!(
            "\ndefine i64 @helper{i}() {{\nentry:\n  %x = add i64 {i}, 1\n  ret i64 %x\n}}\n"
        ));
    }
    text
}

pub fn write_fixture(dir: &Path, name: &str, extra: usize) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, fixture_ir(extra)).unwrap();
    path
}

pub fn anneal_config(max_iterations: usize, seed: u64, stall_limit: usize) -> AnnealerConfig {
    AnnealerConfig {
        cooling: CoolingSchedule::geometric(100.0, 1.0, max_iterations).unwrap(),
        max_iterations,
        initial_sample_size: 20,
        rng_seed: seed,
        stall_limit,
    }
}

/// Driver config over the tiny library with the pad-stub optimizer and the
/// file-size cost model: fully deterministic, no real toolchain needed.
pub fn driver_config(scratch: &Path, engine: EngineChoice, behavior: &str) -> DriverConfig {
    DriverConfig {
        library: tiny_library(),
        max_length: 3,
        engine,
        apply: ApplyConfig::new(stub_optimizer(behavior)),
        cost: CostModelSpec::FileSize,
        schema: FeatureSchema::pfs(),
        stall_limit: 10,
        workers: 1,
        scratch_root: scratch.to_path_buf(),
        finalize: None,
    }
}
