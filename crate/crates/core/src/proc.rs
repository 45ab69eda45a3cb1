//! Command templates and subprocess execution with timeouts.
//!
//! Templates are split on whitespace and executed without any shell, so
//! substituted pipeline strings keep `<`, `;` and `,` intact as a single
//! argument. Placeholders look like `{input}` and may sit inside a larger
//! token (`-passes={pipeline}`).

use std::io::{Read, Write};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("command template is empty")]
    Empty,
    #[error("command template must contain `{{{name}}}` exactly once (found {count})")]
    PlaceholderCount { name: String, count: usize },
}

#[derive(Debug, Error)]
pub enum ProcError {
    #[error("failed to spawn `{program}`: {source}")]
    Spawn {
        program: String,
        #[source]
        source: std::io::Error,
    },
    #[error("i/o error while driving `{program}`: {source}")]
    Io {
        program: String,
        #[source]
        source: std::io::Error,
    },
    #[error("`{program}` not found on PATH")]
    NotFound { program: String },
}

/// Whitespace-split argument vector with `{name}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandTemplate {
    argv: Vec<String>,
}

impl CommandTemplate {
    pub fn parse(text: &str) -> Result<Self, TemplateError> {
        let argv: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        if argv.is_empty() {
            return Err(TemplateError::Empty);
        }
        Ok(Self { argv })
    }

    pub fn program(&self) -> &str {
        &self.argv[0]
    }

    pub fn placeholder_count(&self, name: &str) -> usize {
        let needle = format!("{{{name}}}");
        self.argv.iter().map(|a| a.matches(&needle).count()).sum()
    }

    /// Checks that each named placeholder occurs exactly once.
    pub fn require_placeholders(&self, names: &[&str]) -> Result<(), TemplateError> {
        for name in names {
            let count = self.placeholder_count(name);
            if count != 1 {
                return Err(TemplateError::PlaceholderCount {
                    name: name.to_string(),
                    count,
                });
            }
        }
        Ok(())
    }

    /// Substitutes `{name}` -> value in every token.
    pub fn substitute(&self, vars: &[(&str, &str)]) -> Vec<String> {
        self.argv
            .iter()
            .map(|tok| {
                let mut out = tok.clone();
                for (name, value) in vars {
                    out = out.replace(&format!("{{{name}}}"), value);
                }
                out
            })
            .collect()
    }

    /// Resolves the program against PATH (or as a direct path) without
    /// running it, for startup validation.
    pub fn check_program_exists(&self) -> Result<(), ProcError> {
        let program = self.program();
        if program.contains('/') {
            if Path::new(program).is_file() {
                return Ok(());
            }
        } else if let Some(paths) = std::env::var_os("PATH") {
            for dir in std::env::split_paths(&paths) {
                if dir.join(program).is_file() {
                    return Ok(());
                }
            }
        }
        Err(ProcError::NotFound {
            program: program.to_string(),
        })
    }
}

/// Outcome of a subprocess run. `status` is `None` when the child died to a
/// signal; `timed_out` implies the child was killed.
#[derive(Debug)]
pub struct ProcOutput {
    pub status: Option<i32>,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub timed_out: bool,
}

impl ProcOutput {
    pub fn success(&self) -> bool {
        !self.timed_out && self.status == Some(0)
    }

    pub fn stdout_text(&self) -> String {
        String::from_utf8_lossy(&self.stdout).into_owned()
    }

    pub fn stderr_text(&self) -> String {
        String::from_utf8_lossy(&self.stderr).into_owned()
    }
}

const POLL_INTERVAL: Duration = Duration::from_millis(5);

#[cfg(unix)]
fn kill_tree(child: &mut std::process::Child) {
    unsafe {
        libc::kill(-(child.id() as i32), libc::SIGKILL);
    }
    let _ = child.kill();
}

#[cfg(not(unix))]
fn kill_tree(child: &mut std::process::Child) {
    let _ = child.kill();
}

/// Runs `argv` with optional bytes on stdin, killing the child once
/// `timeout` elapses. Stdout/stderr are drained on helper threads so large
/// outputs cannot deadlock the pipe buffers.
pub fn run_with_timeout(
    argv: &[String],
    stdin_bytes: Option<&[u8]>,
    timeout: Duration,
) -> Result<ProcOutput, ProcError> {
    assert!(!argv.is_empty(), "empty argv");
    let program = argv[0].clone();

    let mut cmd = Command::new(&argv[0]);
    cmd.args(&argv[1..])
        .stdin(if stdin_bytes.is_some() {
            Stdio::piped()
        } else {
            Stdio::null()
        })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    #[cfg(unix)]
    {
        // own process group, so a timeout kill reaps grandchildren too and
        // the pipe readers see EOF promptly
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }
    let mut child = cmd.spawn().map_err(|source| ProcError::Spawn {
        program: program.clone(),
        source,
    })?;

    let stdin_thread = stdin_bytes.map(|bytes| {
        let mut pipe = child.stdin.take().expect("stdin piped");
        let bytes = bytes.to_vec();
        std::thread::spawn(move || {
            // the child may exit without reading; a broken pipe is fine
            let _ = pipe.write_all(&bytes);
        })
    });
    let stdout_thread = {
        let mut pipe = child.stdout.take().expect("stdout piped");
        std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = pipe.read_to_end(&mut buf);
            buf
        })
    };
    let stderr_thread = {
        let mut pipe = child.stderr.take().expect("stderr piped");
        std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = pipe.read_to_end(&mut buf);
            buf
        })
    };

    let deadline = Instant::now() + timeout;
    let (status, timed_out) = loop {
        let polled = child.try_wait().map_err(|source| ProcError::Io {
            program: program.clone(),
            source,
        })?;
        match polled {
            Some(status) => break (status.code(), false),
            None => {
                if Instant::now() >= deadline {
                    kill_tree(&mut child);
                    let status = child.wait().map_err(|source| ProcError::Io {
                        program: program.clone(),
                        source,
                    })?;
                    break (status.code(), true);
                }
                std::thread::sleep(POLL_INTERVAL);
            }
        }
    };

    if let Some(t) = stdin_thread {
        let _ = t.join();
    }
    let stdout = stdout_thread.join().unwrap_or_default();
    let stderr = stderr_thread.join().unwrap_or_default();
    Ok(ProcOutput {
        status,
        stdout,
        stderr,
        timed_out,
    })
}
