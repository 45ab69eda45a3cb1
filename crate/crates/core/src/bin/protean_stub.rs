//! Stand-in optimizer, scorer, and cycle analyzer for tests and demos.
//!
//! Subcommands:
//!
//! - `opt <behavior> <input> <output> <pipeline>` plays the external
//!   optimizer. Behaviors: `copy` (output = input), `annotate` (append a
//!   comment derived from the pipeline hash, so distinct pipelines give
//!   distinct outputs), `pad` (annotate plus a hash-sized comment block, so
//!   file size varies per pipeline), `fail-half` (fail when the pipeline
//!   hash is odd, annotate otherwise), `fail-all`, and `sleep:<ms>[+pad]`.
//! - `score <behavior>` plays the external scorer. Behaviors: `const:<v>`,
//!   `mean` (mean of the second CSV line on stdin), `hash` (score derived
//!   from the value line bytes), `fail`, `garbage`, `sleep:<ms>`.
//! - `score-file <path>` prints a score derived from the file's bytes.
//! - `mca <path>` prints `Total Cycles: <n>` derived from the file size.

use std::io::Read;
use std::process::ExitCode;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn usage() -> ExitCode {
    eprintln!("usage: protean-stub <opt|score|score-file|mca> ...");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.first().map(String::as_str) {
        Some("opt") => run_opt(&args[1..]),
        Some("score") => run_score(&args[1..]),
        Some("score-file") => run_score_file(&args[1..]),
        Some("mca") => run_mca(&args[1..]),
        _ => usage(),
    }
}

fn run_opt(args: &[String]) -> ExitCode {
    let [behavior, input, output, pipeline] = args else {
        return usage();
    };
    let mut behavior = behavior.as_str();
    if let Some(rest) = behavior.strip_prefix("sleep:") {
        let (ms, then) = match rest.split_once('+') {
            Some((ms, then)) => (ms, then),
            None => (rest, "annotate"),
        };
        let ms: u64 = ms.parse().unwrap_or(0);
        std::thread::sleep(std::time::Duration::from_millis(ms));
        behavior = match then {
            "pad" => "pad",
            _ => "annotate",
        };
    }

    let hash = fnv1a(pipeline.as_bytes());
    let data = match std::fs::read(input) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("protean-stub: cannot read {input}: {e}");
            return ExitCode::FAILURE;
        }
    };

    let transformed = match behavior {
        "copy" => data,
        "annotate" => {
            let mut out = data;
            out.extend_from_slice(format!("; stub {hash:016x}\n").as_bytes());
            out
        }
        "pad" => {
            let mut out = data;
            out.extend_from_slice(format!("; stub {hash:016x}\n").as_bytes());
            let pad = (hash % 512) as usize;
            for _ in 0..pad {
                out.extend_from_slice(b"; pad\n");
            }
            out
        }
        "fail-half" => {
            if hash % 2 == 1 {
                eprintln!("protean-stub: synthetic pass crash for pipeline hash {hash:016x}");
                return ExitCode::FAILURE;
            }
            let mut out = data;
            out.extend_from_slice(format!("; stub {hash:016x}\n").as_bytes());
            out
        }
        "fail-all" => {
            eprintln!("protean-stub: unconditional synthetic crash");
            return ExitCode::FAILURE;
        }
        other => {
            eprintln!("protean-stub: unknown opt behavior `{other}`");
            return ExitCode::from(2);
        }
    };

    if let Err(e) = std::fs::write(output, transformed) {
        eprintln!("protean-stub: cannot write {output}: {e}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}

fn read_stdin() -> String {
    let mut buf = String::new();
    let _ = std::io::stdin().read_to_string(&mut buf);
    buf
}

fn run_score(args: &[String]) -> ExitCode {
    let Some(behavior) = args.first() else {
        return usage();
    };
    if let Some(rest) = behavior.strip_prefix("sleep:") {
        let ms: u64 = rest.parse().unwrap_or(0);
        std::thread::sleep(std::time::Duration::from_millis(ms));
        let _ = read_stdin();
        println!("1.0");
        return ExitCode::SUCCESS;
    }
    if let Some(v) = behavior.strip_prefix("const:") {
        let _ = read_stdin();
        println!("{v}");
        return ExitCode::SUCCESS;
    }
    match behavior.as_str() {
        "mean" => {
            let text = read_stdin();
            let Some(values_line) = text.lines().nth(1) else {
                eprintln!("protean-stub: expected two CSV lines on stdin");
                return ExitCode::FAILURE;
            };
            let values: Vec<f64> = values_line
                .split(',')
                .filter_map(|t| t.trim().parse().ok())
                .collect();
            if values.is_empty() {
                eprintln!("protean-stub: no numeric values on line 2");
                return ExitCode::FAILURE;
            }
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            // keep the score positive for arbitrary feature vectors
            println!("{}", 1.0 + mean.abs() / (1.0 + mean.abs()));
            ExitCode::SUCCESS
        }
        "hash" => {
            let text = read_stdin();
            let values_line = text.lines().nth(1).unwrap_or("");
            let h = fnv1a(values_line.as_bytes());
            println!("{}", 1.0 + (h % 1000) as f64 / 1000.0);
            ExitCode::SUCCESS
        }
        "fail" => {
            let _ = read_stdin();
            eprintln!("protean-stub: synthetic scorer failure");
            ExitCode::from(3)
        }
        "garbage" => {
            let _ = read_stdin();
            println!("abc");
            ExitCode::SUCCESS
        }
        other => {
            eprintln!("protean-stub: unknown score behavior `{other}`");
            ExitCode::from(2)
        }
    }
}

fn run_score_file(args: &[String]) -> ExitCode {
    let Some(path) = args.first() else {
        return usage();
    };
    match std::fs::read(path) {
        Ok(data) => {
            let h = fnv1a(&data);
            println!("{}", 1.0 + (h % 1000) as f64 / 1000.0);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("protean-stub: cannot read {path}: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run_mca(args: &[String]) -> ExitCode {
    let Some(path) = args.first() else {
        return usage();
    };
    match std::fs::metadata(path) {
        Ok(meta) => {
            println!("Iterations:        100");
            println!("Total Cycles:      {}", meta.len().max(1));
            println!("Total uOps:        {}", meta.len().max(1) * 2);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("protean-stub: cannot stat {path}: {e}");
            ExitCode::FAILURE
        }
    }
}
