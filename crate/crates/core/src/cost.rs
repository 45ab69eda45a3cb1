//! Score types, the feature-history window, and the concrete cost models.
//!
//! A score is a predicted-speedup-like scalar: dimensionless, positive, and
//! higher-is-better with 1.0 meaning parity with the baseline. Evaluations
//! either succeed with a score or fail with a reason; failures reject the
//! candidate recipe but never abort the search, while infrastructure
//! problems (spawn failures, bad configuration) surface as [`CostError`]
//! and do abort.

use crate::ir::FeatureSchema;
use crate::proc::{run_with_timeout, CommandTemplate, ProcError};
use std::collections::VecDeque;
use std::fmt;
use std::path::Path;
use std::time::Duration;
use thiserror::Error;

/// Number of feature vectors the history window retains.
pub const HISTORY_WINDOW: usize = 5;

/// Floor applied by the linear surrogate so scores stay positive.
pub const DEFAULT_SCORE_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CostError {
    #[error("cost model configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Process(#[from] ProcError),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
#[error("score must be finite and positive, got {0}")]
pub struct InvalidScore(f64);

/// Predicted speedup versus baseline; finite and strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Score(f64);

impl Score {
    pub fn new(value: f64) -> Result<Self, InvalidScore> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(InvalidScore(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Result of evaluating one candidate: a score, or a rejection reason.
#[derive(Debug, Clone, PartialEq)]
pub enum ScoreOutcome {
    Success(Score),
    Failed(String),
}

impl ScoreOutcome {
    pub fn success(value: f64) -> Result<Self, InvalidScore> {
        Score::new(value).map(Self::Success)
    }

    /// Builds a failure; an empty reason is replaced so the reason is
    /// always non-empty.
    pub fn failed(reason: impl Into<String>) -> Self {
        let reason = reason.into();
        if reason.trim().is_empty() {
            Self::Failed("unspecified failure".to_string())
        } else {
            Self::Failed(reason)
        }
    }

    pub fn score(&self) -> Option<Score> {
        match self {
            Self::Success(s) => Some(*s),
            Self::Failed(_) => None,
        }
    }

    pub fn is_failed(&self) -> bool {
        matches!(self, Self::Failed(_))
    }
}

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("feature vector schema `{got}` does not match buffer schema `{expected}`")]
    SchemaMismatch { expected: String, got: String },
    #[error("vector length {got} does not match buffer width {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("history buffer is empty")]
    Empty,
    #[error("feature vector contains a non-finite entry at index {index}")]
    NonFinite { index: usize },
}

/// Fixed-length numeric vector tagged with the schema that defines its
/// column layout.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    schema_id: String,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(schema_id: impl Into<String>, values: Vec<f64>) -> Result<Self, HistoryError> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(HistoryError::NonFinite { index });
        }
        Ok(Self {
            schema_id: schema_id.into(),
            values,
        })
    }

    pub fn schema_id(&self) -> &str {
        &self.schema_id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Sliding window over the feature vectors of the states evaluated so far,
/// oldest first. Appending beyond the window size evicts the oldest entry.
#[derive(Debug, Clone, Default)]
pub struct HistoryBuffer {
    window: VecDeque<FeatureVector>,
}

impl HistoryBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, fv: FeatureVector) -> Result<(), HistoryError> {
        if let Some(front) = self.window.front() {
            if front.schema_id() != fv.schema_id() {
                return Err(HistoryError::SchemaMismatch {
                    expected: front.schema_id().to_string(),
                    got: fv.schema_id().to_string(),
                });
            }
            if front.len() != fv.len() {
                return Err(HistoryError::LengthMismatch {
                    expected: front.len(),
                    got: fv.len(),
                });
            }
        }
        if self.window.len() == HISTORY_WINDOW {
            self.window.pop_front();
        }
        self.window.push_back(fv);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &FeatureVector> {
        self.window.iter()
    }

    /// Element-wise arithmetic mean of the window.
    pub fn aggregate(&self) -> Result<FeatureVector, HistoryError> {
        let first = self.window.front().ok_or(HistoryError::Empty)?;
        let mut sums = vec![0.0; first.len()];
        for entry in &self.window {
            for (acc, v) in sums.iter_mut().zip(entry.values()) {
                *acc += v;
            }
        }
        let n = self.window.len() as f64;
        for acc in &mut sums {
            *acc /= n;
        }
        FeatureVector::new(first.schema_id(), sums)
    }
}

fn parse_scalar(stdout: &str) -> Option<f64> {
    stdout.trim().parse::<f64>().ok()
}

fn format_csv_values(values: &[f64]) -> String {
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!("{v}"));
    }
    out
}

/// Invokes an external scorer over the aggregated history. The child gets
/// two CSV lines on stdin (column names, then values) and must print one
/// decimal scalar on stdout and exit 0. Anything else rejects the
/// candidate; only a failure to spawn is an infrastructure error.
pub fn score_external(
    cmd: &CommandTemplate,
    schema: &FeatureSchema,
    history: &HistoryBuffer,
    timeout: Duration,
) -> Result<ScoreOutcome, CostError> {
    let aggregated = match history.aggregate() {
        Ok(v) => v,
        Err(e) => return Err(CostError::Config(e.to_string())),
    };
    let names: Vec<&str> = schema.names().collect();
    let stdin = format!(
        "{}\n{}\n",
        names.join(","),
        format_csv_values(aggregated.values())
    );
    let argv = cmd.substitute(&[]);
    let out = run_with_timeout(&argv, Some(stdin.as_bytes()), timeout)?;
    Ok(interpret_scorer_output(&out))
}

/// Variant for scorers that read the IR themselves: `{input}` in the
/// template is replaced with the candidate path and nothing is written to
/// stdin.
pub fn score_external_file(
    cmd: &CommandTemplate,
    ir_path: &Path,
    timeout: Duration,
) -> Result<ScoreOutcome, CostError> {
    let path = ir_path.display().to_string();
    let argv = cmd.substitute(&[("input", path.as_str())]);
    let out = run_with_timeout(&argv, None, timeout)?;
    Ok(interpret_scorer_output(&out))
}

fn interpret_scorer_output(out: &crate::proc::ProcOutput) -> ScoreOutcome {
    if out.timed_out {
        return ScoreOutcome::failed("timeout");
    }
    if !out.success() {
        return ScoreOutcome::failed(format!(
            "scorer exited with {:?}: {}",
            out.status,
            out.stderr_text().trim()
        ));
    }
    let text = out.stdout_text();
    match parse_scalar(&text) {
        Some(v) => match ScoreOutcome::success(v) {
            Ok(outcome) => outcome,
            Err(_) => ScoreOutcome::failed(format!("scorer produced a non-positive score {v}")),
        },
        None => ScoreOutcome::failed(format!("unparseable scorer output `{}`", text.trim())),
    }
}

/// Instruction-count oracle: `baseline / candidate`, counting instructions
/// with the IR parser. Parse problems reject the candidate.
pub fn score_instcount(ir_path: &Path, baseline_instcount: u64) -> ScoreOutcome {
    let text = match std::fs::read_to_string(ir_path) {
        Ok(t) => t,
        Err(e) => return ScoreOutcome::failed(format!("unreadable IR: {e}")),
    };
    let model = match crate::ir::parse_ir(&text) {
        Ok(m) => m,
        Err(e) => return ScoreOutcome::failed(format!("IR parse error: {e}")),
    };
    let candidate = model.total_instructions() as u64;
    if candidate == 0 {
        return ScoreOutcome::failed("candidate has zero instructions");
    }
    ScoreOutcome::success(baseline_instcount as f64 / candidate as f64)
        .unwrap_or_else(|e| ScoreOutcome::failed(e.to_string()))
}

/// File-size oracle: `baseline_bytes / candidate_bytes`.
pub fn score_filesize(path: &Path, baseline_bytes: u64) -> ScoreOutcome {
    let bytes = match std::fs::metadata(path) {
        Ok(m) => m.len(),
        Err(e) => return ScoreOutcome::failed(format!("unreadable file: {e}")),
    };
    if bytes == 0 {
        return ScoreOutcome::failed("candidate file is empty");
    }
    ScoreOutcome::success(baseline_bytes as f64 / bytes as f64)
        .unwrap_or_else(|e| ScoreOutcome::failed(e.to_string()))
}

/// Cycle-count oracle: runs an external analyzer over the candidate and
/// scans its stdout for `pattern` followed by an integer, returning
/// `baseline_cycles / candidate_cycles`.
pub fn score_mca(
    cmd: &CommandTemplate,
    ir_path: &Path,
    baseline_cycles: u64,
    pattern: &str,
    timeout: Duration,
) -> Result<ScoreOutcome, CostError> {
    let path = ir_path.display().to_string();
    let argv = cmd.substitute(&[("input", path.as_str())]);
    let out = run_with_timeout(&argv, None, timeout)?;
    if out.timed_out {
        return Ok(ScoreOutcome::failed("timeout"));
    }
    if !out.success() {
        return Ok(ScoreOutcome::failed(format!(
            "cycle analyzer exited with {:?}",
            out.status
        )));
    }
    let stdout = out.stdout_text();
    let Some(cycles) = extract_cycles(&stdout, pattern) else {
        return Ok(ScoreOutcome::failed(format!(
            "pattern `{pattern}` not found in analyzer output"
        )));
    };
    if cycles == 0 {
        return Ok(ScoreOutcome::failed("candidate cycle count is zero"));
    }
    Ok(
        ScoreOutcome::success(baseline_cycles as f64 / cycles as f64)
            .unwrap_or_else(|e| ScoreOutcome::failed(e.to_string())),
    )
}

pub fn extract_cycles(stdout: &str, pattern: &str) -> Option<u64> {
    for line in stdout.lines() {
        if let Some(rest) = line.trim_start().strip_prefix(pattern) {
            let digits: String = rest
                .trim_start()
                .chars()
                .take_while(|c| c.is_ascii_digit())
                .collect();
            if !digits.is_empty() {
                return digits.parse().ok();
            }
        }
    }
    None
}

/// Deterministic in-process surrogate for an external scorer: an affine
/// function over the aggregated history, clamped below to stay positive.
#[derive(Debug, Clone)]
pub struct LinearModel {
    bias: f64,
    weights: Vec<f64>,
    floor: f64,
}

impl LinearModel {
    pub fn new(bias: f64, weights: Vec<f64>) -> Self {
        Self {
            bias,
            weights,
            floor: DEFAULT_SCORE_FLOOR,
        }
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    /// Loads a weight file: one scalar per line, bias first, then exactly
    /// `expected_len` weights.
    pub fn from_file(path: &Path, expected_len: usize) -> Result<Self, CostError> {
        let text = std::fs::read_to_string(path).map_err(|source| CostError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut scalars = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| {
                CostError::Config(format!(
                    "{}: line {}: unparseable weight `{line}`",
                    path.display(),
                    lineno + 1
                ))
            })?;
            scalars.push(v);
        }
        if scalars.len() != expected_len + 1 {
            return Err(CostError::Config(format!(
                "{}: expected {} scalars (bias + {} weights), found {}",
                path.display(),
                expected_len + 1,
                expected_len,
                scalars.len()
            )));
        }
        let bias = scalars.remove(0);
        Ok(Self::new(bias, scalars))
    }

    pub fn score(&self, history: &HistoryBuffer) -> Result<ScoreOutcome, CostError> {
        let aggregated = history
            .aggregate()
            .map_err(|e| CostError::Config(e.to_string()))?;
        if aggregated.len() != self.weights.len() {
            return Err(CostError::Config(format!(
                "linear model has {} weights but features have {} columns",
                self.weights.len(),
                aggregated.len()
            )));
        }
        let dot: f64 = self
            .weights
            .iter()
            .zip(aggregated.values())
            .map(|(w, v)| w * v)
            .sum();
        let value = (self.bias + dot).max(self.floor);
        Ok(ScoreOutcome::success(value).unwrap_or_else(|e| ScoreOutcome::failed(e.to_string())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;
    use std::os::unix::fs::PermissionsExt;

    fn fv(values: &[f64]) -> FeatureVector {
        FeatureVector::new("test", values.to_vec()).unwrap()
    }

    fn history_of(entries: &[&[f64]]) -> HistoryBuffer {
        let mut h = HistoryBuffer::new();
        for e in entries {
            h.push(fv(e)).unwrap();
        }
        h
    }

    /// Writes an executable shell script and returns a template running it.
    fn script(dir: &tempfile::TempDir, name: &str, body: &str) -> CommandTemplate {
        let path = dir.path().join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "#!/bin/sh\n{body}").unwrap();
        drop(f);
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
        CommandTemplate::parse(&path.display().to_string()).unwrap()
    }

    #[test]
    fn scores_must_be_finite_and_positive() {
        assert!(Score::new(1.0).is_ok());
        assert!(Score::new(0.0).is_err());
        assert!(Score::new(-1.0).is_err());
        assert!(Score::new(f64::NAN).is_err());
        assert!(Score::new(f64::INFINITY).is_err());
    }

    #[test]
    fn failed_outcomes_carry_a_reason() {
        assert!(matches!(
            ScoreOutcome::failed(""),
            ScoreOutcome::Failed(r) if !r.is_empty()
        ));
        assert!(matches!(
            ScoreOutcome::failed("crash"),
            ScoreOutcome::Failed(r) if r == "crash"
        ));
    }

    #[test]
    fn history_push_and_eviction() {
        let mut h = HistoryBuffer::new();
        h.push(fv(&[1.0])).unwrap();
        assert_eq!(h.len(), 1);
        for i in 0..5 {
            h.push(fv(&[i as f64 + 2.0])).unwrap();
        }
        assert_eq!(h.len(), HISTORY_WINDOW);
        // the very first push has been evicted
        let firsts: Vec<f64> = h.entries().map(|e| e.values()[0]).collect();
        assert_eq!(firsts, vec![2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn history_rejects_schema_and_length_mismatches() {
        let mut h = history_of(&[&[1.0, 2.0]]);
        assert!(matches!(
            h.push(FeatureVector::new("other", vec![1.0, 2.0]).unwrap()),
            Err(HistoryError::SchemaMismatch { .. })
        ));
        assert!(matches!(
            h.push(fv(&[1.0])),
            Err(HistoryError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(
            history_of(&[&[3.0, 4.0]]).aggregate().unwrap().values(),
            &[3.0, 4.0]
        );
        assert_eq!(
            history_of(&[&[7.0], &[7.0], &[7.0]])
                .aggregate()
                .unwrap()
                .values(),
            &[7.0]
        );
        assert_eq!(
            history_of(&[&[0.0, 2.0], &[2.0, 0.0]])
                .aggregate()
                .unwrap()
                .values(),
            &[1.0, 1.0]
        );
        assert!(matches!(
            HistoryBuffer::new().aggregate(),
            Err(HistoryError::Empty)
        ));
    }

    #[test]
    fn aggregate_is_permutation_invariant_and_idempotent() {
        let a = history_of(&[&[1.0, 5.0], &[3.0, 1.0], &[2.0, 0.0]]);
        let b = history_of(&[&[2.0, 0.0], &[1.0, 5.0], &[3.0, 1.0]]);
        assert_eq!(a.aggregate().unwrap(), b.aggregate().unwrap());
        let constant = history_of(&[&[4.0, 4.0], &[4.0, 4.0]]);
        let agg = constant.aggregate().unwrap();
        let again = history_of(&[agg.values(), agg.values()]).aggregate().unwrap();
        assert_eq!(agg.values(), again.values());
    }

    #[test]
    fn linear_model_examples() {
        let h = history_of(&[&[2.0, 8.0], &[4.0, 2.0]]);
        let constant = LinearModel::new(1.0, vec![0.0, 0.0]);
        assert_eq!(constant.score(&h).unwrap().score().unwrap().value(), 1.0);
        let one_hot = LinearModel::new(0.5, vec![0.0, 1.0]);
        // mean of feature 1 is 5.0
        assert_eq!(one_hot.score(&h).unwrap().score().unwrap().value(), 5.5);
    }

    #[test]
    fn linear_model_matches_naive_dot_product() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let n = rng.gen_range(1..20);
            let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let bias: f64 = rng.gen_range(-1.0..3.0);
            let rows: Vec<Vec<f64>> = (0..rng.gen_range(1..=HISTORY_WINDOW))
                .map(|_| (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect())
                .collect();
            let h = history_of(&rows.iter().map(|r| r.as_slice()).collect::<Vec<_>>());
            let model = LinearModel::new(bias, weights.clone());
            let got = model.score(&h).unwrap().score().unwrap().value();
            // naive recomputation
            let mut mean = vec![0.0; n];
            for row in &rows {
                for (m, v) in mean.iter_mut().zip(row) {
                    *m += v / rows.len() as f64;
                }
            }
            let mut expect = bias;
            for i in 0..n {
                expect += weights[i] * mean[i];
            }
            expect = expect.max(DEFAULT_SCORE_FLOOR);
            assert!((got - expect).abs() <= 1e-12, "{got} vs {expect}");
        }
    }

    #[test]
    fn linear_model_clamps_to_floor() {
        let h = history_of(&[&[10.0]]);
        let model = LinearModel::new(0.0, vec![-1.0]);
        let v = model.score(&h).unwrap().score().unwrap().value();
        assert_eq!(v, DEFAULT_SCORE_FLOOR);
    }

    #[test]
    fn linear_model_dimension_mismatch_is_config_error() {
        let h = history_of(&[&[1.0, 2.0]]);
        let model = LinearModel::new(0.0, vec![1.0]);
        assert!(matches!(model.score(&h), Err(CostError::Config(_))));
    }

    #[test]
    fn linear_model_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("weights.txt");
        std::fs::write(&path, "# bias then weights\n1.5\n0.25\n-0.5\n").unwrap();
        let model = LinearModel::from_file(&path, 2).unwrap();
        let h = history_of(&[&[4.0, 2.0]]);
        assert_eq!(model.score(&h).unwrap().score().unwrap().value(), 1.5);
        assert!(matches!(
            LinearModel::from_file(&path, 3),
            Err(CostError::Config(_))
        ));
    }

    #[test]
    fn instcount_and_filesize_oracles() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ll");
        std::fs::write(&path, "define void @f() {\n  %a = alloca i32\n  ret void\n}\n").unwrap();
        // 2 instructions
        match score_instcount(&path, 2) {
            ScoreOutcome::Success(s) => assert_eq!(s.value(), 1.0),
            other => panic!("{other:?}"),
        }
        match score_instcount(&path, 4) {
            ScoreOutcome::Success(s) => assert_eq!(s.value(), 2.0),
            other => panic!("{other:?}"),
        }
        assert!(score_instcount(&dir.path().join("missing.ll"), 2).is_failed());
        let empty_fn = dir.path().join("none.ll");
        std::fs::write(&empty_fn, "").unwrap();
        assert!(score_instcount(&empty_fn, 2).is_failed());
        let unbalanced = dir.path().join("bad.ll");
        std::fs::write(&unbalanced, "define void @f() {\n ret void\n").unwrap();
        assert!(score_instcount(&unbalanced, 2).is_failed());

        let bytes = std::fs::metadata(&path).unwrap().len();
        match score_filesize(&path, bytes) {
            ScoreOutcome::Success(s) => assert_eq!(s.value(), 1.0),
            other => panic!("{other:?}"),
        }
        match score_filesize(&path, bytes * 2) {
            ScoreOutcome::Success(s) => assert_eq!(s.value(), 2.0),
            other => panic!("{other:?}"),
        }
        assert!(score_filesize(&dir.path().join("missing"), 1).is_failed());
    }

    #[test]
    fn oracles_are_pure() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ll");
        std::fs::write(&path, "define void @f() {\n  ret void\n}\n").unwrap();
        assert_eq!(score_instcount(&path, 3), score_instcount(&path, 3));
        assert_eq!(score_filesize(&path, 10), score_filesize(&path, 10));
    }

    #[test]
    fn external_scorer_protocol() {
        let dir = tempfile::tempdir().unwrap();
        let schema = FeatureSchema::pfs();
        let h = history_of(&[&vec![1.0; schema.len()]]);
        // a scorer that ignores stdin and echoes a constant
        let echo = script(&dir, "echo.sh", "cat > /dev/null; echo 1.08");
        match score_external(&echo, &schema, &h, Duration::from_secs(5)).unwrap() {
            ScoreOutcome::Success(s) => assert!((s.value() - 1.08).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        let fail = script(&dir, "fail.sh", "cat > /dev/null; exit 3");
        assert!(score_external(&fail, &schema, &h, Duration::from_secs(5))
            .unwrap()
            .is_failed());
        let garbage = script(&dir, "garbage.sh", "cat > /dev/null; echo abc");
        match score_external(&garbage, &schema, &h, Duration::from_secs(5)).unwrap() {
            ScoreOutcome::Failed(r) => assert!(r.contains("unparseable")),
            other => panic!("{other:?}"),
        }
        // stdin sees exactly two lines: header then values
        let shape = script(&dir, "shape.sh", "test \"$(wc -l)\" = 2 && echo 1.0 || echo bad");
        assert!(!score_external(&shape, &schema, &h, Duration::from_secs(5))
            .unwrap()
            .is_failed());
    }

    #[test]
    fn external_scorer_timeout_and_spawn_failure() {
        let dir = tempfile::tempdir().unwrap();
        let schema = FeatureSchema::pfs();
        let h = history_of(&[&vec![1.0; schema.len()][..]]);
        let slow = script(&dir, "slow.sh", "sleep 10; echo 1.0");
        let start = std::time::Instant::now();
        match score_external(&slow, &schema, &h, Duration::from_millis(200)).unwrap() {
            ScoreOutcome::Failed(r) => assert_eq!(r, "timeout"),
            other => panic!("{other:?}"),
        }
        assert!(start.elapsed() < Duration::from_millis(1200));
        let missing = CommandTemplate::parse("no-such-scorer-binary-321").unwrap();
        assert!(score_external(&missing, &schema, &h, Duration::from_secs(1)).is_err());
    }

    #[test]
    fn external_file_scorer_sees_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let ir = dir.path().join("m.ll");
        std::fs::write(&ir, "x").unwrap();
        let path = dir.path().join("check.sh");
        std::fs::write(&path, "#!/bin/sh\ntest -f \"$1\" && echo 2.5 || echo 0\n").unwrap();
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
        let cmd = CommandTemplate::parse(&format!("{} {{input}}", path.display())).unwrap();
        match score_external_file(&cmd, &ir, Duration::from_secs(5)).unwrap() {
            ScoreOutcome::Success(s) => assert_eq!(s.value(), 2.5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mca_pattern_extraction() {
        assert_eq!(
            extract_cycles("Iterations: 1\nTotal Cycles: 4096\n", "Total Cycles:"),
            Some(4096)
        );
        assert_eq!(extract_cycles("no cycles here", "Total Cycles:"), None);
    }

    #[test]
    fn mca_scoring() {
        let dir = tempfile::tempdir().unwrap();
        let ir = dir.path().join("m.ll");
        std::fs::write(&ir, "x").unwrap();
        let path = dir.path().join("mca.sh");
        std::fs::write(&path, "#!/bin/sh\necho \"Total Cycles: 200\"\n").unwrap();
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
        let cmd = CommandTemplate::parse(&format!("{} {{input}}", path.display())).unwrap();
        match score_mca(&cmd, &ir, 200, "Total Cycles:", Duration::from_secs(5)).unwrap() {
            ScoreOutcome::Success(s) => assert_eq!(s.value(), 1.0),
            other => panic!("{other:?}"),
        }
        match score_mca(&cmd, &ir, 400, "Cycle Total:", Duration::from_secs(5)).unwrap() {
            ScoreOutcome::Failed(r) => assert!(r.contains("not found")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn success_scores_stay_finite_and_positive_under_fuzz() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let n = rng.gen_range(1..8);
            let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
            let bias = rng.gen_range(-100.0..100.0);
            let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-1000.0..1000.0)).collect();
            let h = history_of(&[&row]);
            let model = LinearModel::new(bias, weights);
            if let ScoreOutcome::Success(s) = model.score(&h).unwrap() {
                assert!(s.value().is_finite() && s.value() > 0.0);
            } else {
                panic!("linear surrogate never fails");
            }
            // ratio oracles over fuzzed counts
            let baseline = rng.gen_range(1..1_000_000u64);
            let candidate = rng.gen_range(1..1_000_000u64);
            let v = baseline as f64 / candidate as f64;
            let s = Score::new(v).unwrap();
            assert!(s.value().is_finite() && s.value() > 0.0);
        }
    }
}
