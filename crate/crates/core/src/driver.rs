//! Orchestration: partitioning, recipe application through the external
//! optimizer, evaluation caching, unchanged-output early exit, and
//! result/trace emission.
//!
//! Each input file becomes one partition with its own work directory,
//! evaluation cache, and history window. Partitions are processed by a
//! worker pool but are fully independent, so results do not depend on pool
//! width or completion order. Command templates run without a shell;
//! children's stderr is appended to a per-partition log file.

use crate::cost::{
    score_external, score_external_file, score_filesize, score_instcount, score_mca, CostError,
    FeatureVector, HistoryBuffer, LinearModel, Score, ScoreOutcome,
};
use crate::ir::{
    collect_features, fingerprint_file, parse_ir_named, FeatureSchema, Fingerprint,
};
use crate::proc::{run_with_timeout, CommandTemplate, ProcError, TemplateError};
use crate::recipe::{Recipe, RecipeSpace, SubsequenceLibrary, UnknownGene};
use crate::search::{
    run_annealing, run_ga, AnnealerConfig, CostEvaluator, EngineError, GaConfig, SearchTrace,
    TerminalReason,
};
use serde::Serialize;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;
use thiserror::Error;

/// Cap on the stderr excerpt embedded in a failure reason.
const STDERR_EXCERPT_LIMIT: usize = 2048;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("no input files given")]
    NoInputs,
    #[error("cannot read input `{path}`: {source}")]
    UnreadableInput {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("i/o failure at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("optimizer command template: {0}")]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Proc(#[from] ProcError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("search engine: {0}")]
    Engine(#[from] EngineError),
    #[error("recipe expansion: {0}")]
    Expand(#[from] UnknownGene),
    #[error("partition `{id}`: baseline production failed: {message}")]
    Baseline { id: String, message: String },
    #[error("configuration: {0}")]
    Config(String),
}

/// How to invoke the external optimizer. The template must contain
/// `{input}`, `{output}` and `{pipeline}` exactly once each.
#[derive(Debug, Clone)]
pub struct ApplyConfig {
    pub optimizer: CommandTemplate,
    pub timeout: Duration,
    /// Pipeline used to build the per-partition reference artifact; when
    /// absent, the expansion of the canonical recipe is used.
    pub baseline_pipeline: Option<String>,
}

impl ApplyConfig {
    pub fn new(optimizer: CommandTemplate) -> Self {
        Self {
            optimizer,
            timeout: Duration::from_secs(60),
            baseline_pipeline: None,
        }
    }

    pub fn validate(&self) -> Result<(), DriverError> {
        self.optimizer
            .require_placeholders(&["input", "output", "pipeline"])?;
        Ok(())
    }
}

/// Metrics of the per-partition baseline artifact.
#[derive(Debug, Clone, Copy, Default)]
pub struct BaselineMetrics {
    pub instcount: Option<u64>,
    pub bytes: u64,
    pub cycles: Option<u64>,
}

/// One independently optimized input file.
#[derive(Debug, Clone)]
pub struct Partition {
    pub id: String,
    pub input_path: PathBuf,
    pub work_dir: PathBuf,
    /// Filled once the baseline artifact has been produced.
    pub baseline: Option<BaselineMetrics>,
}

/// One partition per input file; ids are file stems, de-duplicated with
/// numeric suffixes in input order. Work directories are created under
/// `scratch_root`.
pub fn partition_inputs(
    paths: &[PathBuf],
    scratch_root: &Path,
) -> Result<Vec<Partition>, DriverError> {
    if paths.is_empty() {
        return Err(DriverError::NoInputs);
    }
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut partitions = Vec::with_capacity(paths.len());
    for path in paths {
        std::fs::File::open(path).map_err(|source| DriverError::UnreadableInput {
            path: path.display().to_string(),
            source,
        })?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "input".to_string());
        let id = match seen.get_mut(&stem) {
            None => {
                seen.insert(stem.clone(), 0);
                stem
            }
            Some(count) => {
                *count += 1;
                format!("{stem}-{count}")
            }
        };
        let work_dir = scratch_root.join(&id);
        std::fs::create_dir_all(&work_dir).map_err(|source| DriverError::Io {
            path: work_dir.display().to_string(),
            source,
        })?;
        partitions.push(Partition {
            id,
            input_path: path.clone(),
            work_dir,
            baseline: None,
        });
    }
    Ok(partitions)
}

#[derive(Debug, Clone)]
pub struct ApplySuccess {
    pub output_path: PathBuf,
    pub fingerprint: Fingerprint,
}

#[derive(Debug, Clone)]
pub enum ApplyOutcome {
    Applied(ApplySuccess),
    Failed { reason: String },
}

/// Cache of evaluation outcomes per recipe, keyed by gene string. Entries
/// never change once written.
#[derive(Debug, Default)]
pub struct EvalCache {
    entries: HashMap<String, CacheEntry>,
}

#[derive(Debug, Clone)]
pub struct CacheEntry {
    pub outcome: ScoreOutcome,
    pub fingerprint: Option<Fingerprint>,
    pub output_path: Option<PathBuf>,
}

impl EvalCache {
    pub fn get(&self, genes: &str) -> Option<&CacheEntry> {
        self.entries.get(genes)
    }

    pub fn insert(&mut self, genes: String, entry: CacheEntry) {
        debug_assert!(
            !self.entries.contains_key(&genes),
            "cache entries are write-once"
        );
        self.entries.entry(genes).or_insert(entry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn failed_count(&self) -> usize {
        self.entries
            .values()
            .filter(|e| e.outcome.is_failed())
            .count()
    }
}

/// Cost model wiring at the driver level.
#[derive(Debug, Clone)]
pub enum CostModelSpec {
    /// External scorer fed the aggregated feature history over stdin.
    ExternalFeatures {
        cmd: CommandTemplate,
        timeout: Duration,
    },
    /// External scorer invoked with the candidate IR path substituted for
    /// `{input}`; no feature collection.
    ExternalFile {
        cmd: CommandTemplate,
        timeout: Duration,
    },
    /// In-process linear surrogate over the aggregated feature history.
    Linear(LinearModel),
    InstCount,
    FileSize,
    Mca {
        cmd: CommandTemplate,
        timeout: Duration,
        pattern: String,
    },
}

impl CostModelSpec {
    fn needs_features(&self) -> bool {
        matches!(self, Self::ExternalFeatures { .. } | Self::Linear(_))
    }

    fn validate(&self) -> Result<(), DriverError> {
        match self {
            Self::ExternalFeatures { cmd, .. } | Self::ExternalFile { cmd, .. } => {
                cmd.check_program_exists()?
            }
            Self::Mca { cmd, .. } => cmd.check_program_exists()?,
            Self::Linear(_) | Self::InstCount | Self::FileSize => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum EngineChoice {
    Annealing(AnnealerConfig),
    Genetic(GaConfig),
}

impl EngineChoice {
    pub fn kind(&self) -> EngineKind {
        match self {
            Self::Annealing(_) => EngineKind::Annealing,
            Self::Genetic(_) => EngineKind::Genetic,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Self::Annealing(c) => c.rng_seed,
            Self::Genetic(c) => c.rng_seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Annealing,
    Genetic,
}

impl EngineKind {
    pub fn banner_name(self) -> &'static str {
        match self {
            Self::Annealing => "Simulated Annealing",
            Self::Genetic => "Genetic Recommender",
        }
    }
}

/// Full driver configuration, normally assembled by the CLI.
#[derive(Debug, Clone)]
pub struct DriverConfig {
    pub library: SubsequenceLibrary,
    pub max_length: usize,
    pub engine: EngineChoice,
    pub apply: ApplyConfig,
    pub cost: CostModelSpec,
    pub schema: FeatureSchema,
    pub stall_limit: usize,
    /// Worker pool width; 0 means available parallelism.
    pub workers: usize,
    pub scratch_root: PathBuf,
    pub finalize: Option<CommandTemplate>,
}

impl DriverConfig {
    pub fn validate(&self) -> Result<(), DriverError> {
        self.apply.validate()?;
        self.apply.optimizer.check_program_exists()?;
        self.cost.validate()?;
        if self.stall_limit < 1 {
            return Err(DriverError::Config("stall-limit must be >= 1".into()));
        }
        match &self.engine {
            EngineChoice::Annealing(c) => c.validate()?,
            EngineChoice::Genetic(c) => c.validate()?,
        }
        if let Some(finalize) = &self.finalize {
            finalize.check_program_exists()?;
        }
        Ok(())
    }

    fn space(&self) -> RecipeSpace {
        RecipeSpace::new(self.library.clone(), self.max_length)
    }
}

/// Outcome of optimizing one partition.
#[derive(Debug, Clone)]
pub struct PartitionResult {
    pub id: String,
    pub best: Recipe,
    pub best_score: Score,
    pub iterations: usize,
    pub failures: usize,
    pub terminal_reason: TerminalReason,
    pub trace: SearchTrace,
    pub output_path: Option<PathBuf>,
    /// Distinct recipes evaluated (cache entries).
    pub explored: usize,
    /// Optimizer subprocess spawns during the search (baseline and final
    /// re-apply excluded).
    pub spawns: u64,
    pub baseline: BaselineMetrics,
    pub engine: EngineKind,
}

/// Applies a recipe through the optimizer template. Non-zero exit, signal
/// death, timeout, or a missing output file reject the candidate; the empty
/// recipe copies input to output without spawning anything.
pub fn apply_recipe(
    partition: &Partition,
    recipe: &Recipe,
    library: &SubsequenceLibrary,
    cfg: &ApplyConfig,
) -> Result<ApplyOutcome, DriverError> {
    let pipeline = library.expand(recipe)?;
    let output = candidate_path(partition, recipe);
    apply_pipeline(partition, &pipeline, &output, cfg)
}

fn candidate_path(partition: &Partition, recipe: &Recipe) -> PathBuf {
    let genes = recipe.to_string();
    let name = if genes.is_empty() {
        "cand-identity.ll".to_string()
    } else {
        format!("cand-{genes}.ll")
    };
    partition.work_dir.join(name)
}

fn apply_pipeline(
    partition: &Partition,
    pipeline: &str,
    output: &Path,
    cfg: &ApplyConfig,
) -> Result<ApplyOutcome, DriverError> {
    if pipeline.is_empty() {
        std::fs::copy(&partition.input_path, output).map_err(|source| DriverError::Io {
            path: output.display().to_string(),
            source,
        })?;
        let fingerprint = fingerprint_file(output).map_err(|source| DriverError::Io {
            path: output.display().to_string(),
            source,
        })?;
        return Ok(ApplyOutcome::Applied(ApplySuccess {
            output_path: output.to_path_buf(),
            fingerprint,
        }));
    }

    let input = partition.input_path.display().to_string();
    let out_text = output.display().to_string();
    let argv = cfg.optimizer.substitute(&[
        ("input", input.as_str()),
        ("output", out_text.as_str()),
        ("pipeline", pipeline),
    ]);
    let _ = std::fs::remove_file(output);
    let result = run_with_timeout(&argv, None, cfg.timeout)?;
    log_stderr(partition, pipeline, &result.stderr);

    if result.timed_out {
        return Ok(ApplyOutcome::Failed {
            reason: "optimizer timeout".to_string(),
        });
    }
    if result.status != Some(0) {
        let excerpt = stderr_excerpt(&result.stderr);
        let reason = match result.status {
            Some(code) => format!("optimizer exited with {code}: {excerpt}"),
            None => format!("optimizer killed by signal: {excerpt}"),
        };
        return Ok(ApplyOutcome::Failed { reason });
    }
    if !output.is_file() {
        return Ok(ApplyOutcome::Failed {
            reason: "optimizer produced no output file".to_string(),
        });
    }
    let fingerprint = fingerprint_file(output).map_err(|source| DriverError::Io {
        path: output.display().to_string(),
        source,
    })?;
    Ok(ApplyOutcome::Applied(ApplySuccess {
        output_path: output.to_path_buf(),
        fingerprint,
    }))
}

fn stderr_excerpt(stderr: &[u8]) -> String {
    let text = String::from_utf8_lossy(stderr);
    let trimmed = text.trim();
    if trimmed.len() <= STDERR_EXCERPT_LIMIT {
        trimmed.to_string()
    } else {
        let mut end = STDERR_EXCERPT_LIMIT;
        while !trimmed.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}...", &trimmed[..end])
    }
}

fn log_stderr(partition: &Partition, pipeline: &str, stderr: &[u8]) {
    if stderr.is_empty() {
        return;
    }
    let log = partition.work_dir.join("optimizer.log");
    if let Ok(mut f) = std::fs::OpenOptions::new().create(true).append(true).open(log) {
        let _ = writeln!(f, "--- pipeline: {pipeline}");
        let _ = f.write_all(stderr);
        let _ = writeln!(f);
    }
}

/// The per-partition evaluation session the engines drive: owns the cache
/// and the history window, counts optimizer spawns, and requests an early
/// stop once the transformed IR's fingerprint has matched the best-so-far
/// fingerprint for `stall_limit` consecutive evaluations.
///
/// [`optimize_partition`] wires a session to a search engine; it can also
/// be driven directly with a scripted proposal sequence.
pub struct PartitionSession<'a> {
    partition: &'a Partition,
    cfg: &'a DriverConfig,
    baseline: BaselineMetrics,
    cache: EvalCache,
    history: HistoryBuffer,
    module_name: String,
    stall_counter: usize,
    best_score: Option<f64>,
    best_fingerprint: Option<Fingerprint>,
    stop: bool,
    spawns: u64,
}

impl<'a> PartitionSession<'a> {
    /// Produces the baseline artifact and opens a fresh session.
    pub fn open(partition: &'a Partition, cfg: &'a DriverConfig) -> Result<Self, DriverError> {
        let space = cfg.space();
        let mut history = HistoryBuffer::new();
        let baseline = prepare_baseline(partition, cfg, &space, &mut history)?;
        Ok(Self {
            partition,
            cfg,
            baseline,
            cache: EvalCache::default(),
            history,
            module_name: module_name_for(partition),
            stall_counter: 0,
            best_score: None,
            best_fingerprint: None,
            stop: false,
            spawns: 0,
        })
    }

    pub fn spawns(&self) -> u64 {
        self.spawns
    }

    pub fn cache(&self) -> &EvalCache {
        &self.cache
    }

    pub fn baseline(&self) -> BaselineMetrics {
        self.baseline
    }

    fn observe_fingerprint(&mut self, fingerprint: &Fingerprint, score: f64) {
        match &self.best_fingerprint {
            Some(best) if best == fingerprint => self.stall_counter += 1,
            Some(_) => self.stall_counter = 0,
            None => {}
        }
        if self.best_score.is_none_or(|b| score > b) {
            self.best_score = Some(score);
            self.best_fingerprint = Some(fingerprint.clone());
        }
        if self.stall_counter >= self.cfg.stall_limit {
            self.stop = true;
        }
    }

    fn extract_features(&self, output: &Path) -> Result<Option<FeatureVector>, CostError> {
        let text = std::fs::read_to_string(output).map_err(|source| CostError::Io {
            path: output.display().to_string(),
            source,
        })?;
        let model = match parse_ir_named(&text, &self.module_name) {
            Ok(m) => m,
            Err(_) => return Ok(None),
        };
        let rows = collect_features(&model, &self.cfg.schema);
        Ok(rows.into_iter().next().map(|r| r.values))
    }

    fn score_output(&mut self, output: &Path) -> Result<ScoreOutcome, CostError> {
        match &self.cfg.cost {
            CostModelSpec::InstCount => {
                let baseline = self.baseline.instcount.ok_or_else(|| {
                    CostError::Config("baseline instruction count unavailable".into())
                })?;
                Ok(score_instcount(output, baseline))
            }
            CostModelSpec::FileSize => Ok(score_filesize(output, self.baseline.bytes)),
            CostModelSpec::Mca {
                cmd,
                timeout,
                pattern,
            } => {
                let baseline = self
                    .baseline
                    .cycles
                    .ok_or_else(|| CostError::Config("baseline cycle count unavailable".into()))?;
                score_mca(cmd, output, baseline, pattern, *timeout)
            }
            CostModelSpec::ExternalFile { cmd, timeout } => {
                score_external_file(cmd, output, *timeout)
            }
            CostModelSpec::ExternalFeatures { cmd, timeout } => {
                score_external(cmd, &self.cfg.schema, &self.history, *timeout)
            }
            CostModelSpec::Linear(model) => model.score(&self.history),
        }
    }
}

impl CostEvaluator for PartitionSession<'_> {
    fn evaluate(&mut self, recipe: &Recipe) -> Result<ScoreOutcome, CostError> {
        let key = recipe.to_string();
        if let Some(entry) = self.cache.get(&key) {
            let outcome = entry.outcome.clone();
            if let (Some(score), Some(fp)) = (outcome.score(), entry.fingerprint.clone()) {
                self.observe_fingerprint(&fp, score.value());
            }
            return Ok(outcome);
        }

        let applied = apply_recipe(self.partition, recipe, &self.cfg.library, &self.cfg.apply)
            .map_err(|e| CostError::Config(e.to_string()))?;
        if !recipe.is_empty() {
            self.spawns += 1;
        }
        let entry = match applied {
            ApplyOutcome::Failed { reason } => CacheEntry {
                outcome: ScoreOutcome::failed(reason),
                fingerprint: None,
                output_path: None,
            },
            ApplyOutcome::Applied(success) => {
                if self.cfg.cost.needs_features() {
                    match self.extract_features(&success.output_path)? {
                        Some(fv) => {
                            self.history
                                .push(fv)
                                .map_err(|e| CostError::Config(e.to_string()))?;
                        }
                        None => {
                            let entry = CacheEntry {
                                outcome: ScoreOutcome::failed(
                                    "transformed IR is outside the parseable subset",
                                ),
                                fingerprint: Some(success.fingerprint),
                                output_path: Some(success.output_path),
                            };
                            self.cache.insert(key, entry.clone());
                            return Ok(entry.outcome);
                        }
                    }
                }
                let outcome = self.score_output(&success.output_path)?;
                if let Some(score) = outcome.score() {
                    self.observe_fingerprint(&success.fingerprint, score.value());
                }
                CacheEntry {
                    outcome,
                    fingerprint: Some(success.fingerprint),
                    output_path: Some(success.output_path),
                }
            }
        };
        self.cache.insert(key, entry.clone());
        Ok(entry.outcome)
    }

    fn stop_requested(&self) -> bool {
        self.stop
    }
}

fn module_name_for(partition: &Partition) -> String {
    partition
        .input_path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| partition.id.clone())
}

/// Produces the baseline artifact and its metrics, seeding the feature
/// history for feature-driven cost models.
fn prepare_baseline(
    partition: &Partition,
    cfg: &DriverConfig,
    space: &RecipeSpace,
    history: &mut HistoryBuffer,
) -> Result<BaselineMetrics, DriverError> {
    let pipeline = match &cfg.apply.baseline_pipeline {
        Some(p) => p.clone(),
        None => cfg.library.expand(&space.canonical())?,
    };
    let baseline_path = partition.work_dir.join("baseline.ll");
    let success = match apply_pipeline(partition, &pipeline, &baseline_path, &cfg.apply)? {
        ApplyOutcome::Applied(success) => success,
        ApplyOutcome::Failed { reason } => {
            return Err(DriverError::Baseline {
                id: partition.id.clone(),
                message: reason,
            })
        }
    };

    let bytes = std::fs::metadata(&success.output_path)
        .map_err(|source| DriverError::Io {
            path: success.output_path.display().to_string(),
            source,
        })?
        .len();

    let text = std::fs::read_to_string(&success.output_path).ok();
    let parsed = text
        .as_deref()
        .and_then(|t| parse_ir_named(t, module_name_for(partition)).ok());
    let instcount = parsed.as_ref().map(|m| m.total_instructions() as u64);

    if matches!(cfg.cost, CostModelSpec::InstCount) && instcount.is_none() {
        return Err(DriverError::Baseline {
            id: partition.id.clone(),
            message: "baseline artifact is outside the parseable subset".into(),
        });
    }

    let cycles = match &cfg.cost {
        CostModelSpec::Mca {
            cmd,
            timeout,
            pattern,
        } => {
            let argv_input = success.output_path.display().to_string();
            let argv = cmd.substitute(&[("input", argv_input.as_str())]);
            let out = run_with_timeout(&argv, None, *timeout)?;
            let cycles = if out.success() {
                crate::cost::extract_cycles(&out.stdout_text(), pattern)
            } else {
                None
            };
            match cycles {
                Some(c) if c > 0 => Some(c),
                _ => {
                    return Err(DriverError::Baseline {
                        id: partition.id.clone(),
                        message: "cycle analyzer produced no baseline cycle count".into(),
                    })
                }
            }
        }
        _ => None,
    };

    if cfg.cost.needs_features() {
        let Some(model) = parsed else {
            return Err(DriverError::Baseline {
                id: partition.id.clone(),
                message: "baseline artifact is outside the parseable subset".into(),
            });
        };
        let rows = collect_features(&model, &cfg.schema);
        if let Some(row) = rows.into_iter().next() {
            history
                .push(row.values)
                .map_err(|e| DriverError::Config(e.to_string()))?;
        }
    }

    Ok(BaselineMetrics {
        instcount,
        bytes,
        cycles,
    })
}

/// Runs the configured engine over one partition and re-applies the winning
/// recipe to produce the final output IR.
pub fn optimize_partition(
    partition: &Partition,
    cfg: &DriverConfig,
    rng_seed: u64,
) -> Result<PartitionResult, DriverError> {
    let space = cfg.space();
    let mut evaluator = PartitionSession::open(partition, cfg)?;

    let outcome = match &cfg.engine {
        EngineChoice::Annealing(c) => {
            let engine_cfg = AnnealerConfig {
                rng_seed,
                ..c.clone()
            };
            run_annealing(&engine_cfg, &space, &mut evaluator)?
        }
        EngineChoice::Genetic(c) => {
            let engine_cfg = GaConfig {
                rng_seed,
                ..c.clone()
            };
            run_ga(&engine_cfg, &space, &mut evaluator)?
        }
    };

    let explored = evaluator.cache.len();
    let spawns = evaluator.spawns;
    let baseline = evaluator.baseline;
    debug_assert_eq!(outcome.failures, evaluator.cache.failed_count());

    // re-apply the winner so the partition's final artifact exists under a
    // stable name
    let final_path = partition.work_dir.join(format!("{}-best.ll", partition.id));
    let pipeline = cfg.library.expand(&outcome.best)?;
    let output_path = match apply_pipeline(partition, &pipeline, &final_path, &cfg.apply)? {
        ApplyOutcome::Applied(success) => Some(success.output_path),
        ApplyOutcome::Failed { reason } => {
            return Err(DriverError::Baseline {
                id: partition.id.clone(),
                message: format!("re-applying the best recipe failed: {reason}"),
            })
        }
    };

    Ok(PartitionResult {
        id: partition.id.clone(),
        best: outcome.best,
        best_score: outcome.best_cost,
        iterations: outcome.trace.rows.len(),
        failures: outcome.failures,
        terminal_reason: outcome.trace.terminal_reason,
        trace: outcome.trace,
        output_path,
        explored,
        spawns,
        baseline,
        engine: cfg.engine.kind(),
    })
}

/// Per-partition report: the result, or the diagnostic that aborted it.
#[derive(Debug)]
pub struct PartitionReport {
    pub id: String,
    pub outcome: Result<PartitionResult, String>,
}

#[derive(Debug)]
pub struct DriverReport {
    pub partitions: Vec<PartitionReport>,
    pub finalize_error: Option<String>,
}

impl DriverReport {
    pub fn any_failed(&self) -> bool {
        self.partitions.iter().any(|p| p.outcome.is_err()) || self.finalize_error.is_some()
    }
}

/// Optimizes every input on a worker pool. Results come back in input
/// order; a partition's infrastructure failure is recorded in its slot and
/// leaves the others untouched. The finalize command, when configured, runs
/// exactly once after all partitions, with every final IR path appended.
pub fn run_driver(inputs: &[PathBuf], cfg: &DriverConfig) -> Result<DriverReport, DriverError> {
    cfg.validate()?;
    let partitions = partition_inputs(inputs, &cfg.scratch_root)?;
    let base_seed = cfg.engine.seed();

    let workers = if cfg.workers == 0 {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    } else {
        cfg.workers
    }
    .min(partitions.len().max(1));

    let slots: Mutex<Vec<Option<PartitionReport>>> =
        Mutex::new((0..partitions.len()).map(|_| None).collect());
    let next: Mutex<usize> = Mutex::new(0);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = {
                    let mut guard = next.lock().unwrap();
                    let idx = *guard;
                    *guard += 1;
                    idx
                };
                if idx >= partitions.len() {
                    break;
                }
                let partition = &partitions[idx];
                // the per-partition seed derives from input order, so
                // results do not depend on scheduling
                let seed = base_seed.wrapping_add(idx as u64);
                let outcome = optimize_partition(partition, cfg, seed).map_err(|e| e.to_string());
                slots.lock().unwrap()[idx] = Some(PartitionReport {
                    id: partition.id.clone(),
                    outcome,
                });
            });
        }
    });

    let partitions: Vec<PartitionReport> = slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|slot| slot.expect("every slot filled"))
        .collect();

    let finalize_error = match &cfg.finalize {
        None => None,
        Some(template) => {
            let mut argv = template.substitute(&[]);
            for report in &partitions {
                if let Ok(result) = &report.outcome {
                    if let Some(path) = &result.output_path {
                        argv.push(path.display().to_string());
                    }
                }
            }
            match run_with_timeout(&argv, None, Duration::from_secs(600)) {
                Ok(out) if out.success() => None,
                Ok(out) => Some(format!(
                    "finalize command exited with {:?}: {}",
                    out.status,
                    stderr_excerpt(&out.stderr)
                )),
                Err(e) => Some(e.to_string()),
            }
        }
    };

    Ok(DriverReport {
        partitions,
        finalize_error,
    })
}

/// Three-decimal truncation: the reference traces print temperatures cut,
/// not rounded, at the third decimal.
pub fn format_temperature(t: f64) -> String {
    format!("{:.3}", ((t * 1000.0) + 1e-6).floor() / 1000.0)
}

pub fn format_cost(c: Option<Score>, failed_marker: &str) -> String {
    match c {
        Some(s) => format!("{:.2}", s.value()),
        None => failed_marker.to_string(),
    }
}

fn banner(text: &str, out: &mut String) {
    out.push_str(text);
    out.push('\n');
    for _ in 0..text.chars().count() {
        out.push('-');
    }
    out.push('\n');
}

pub const TRACE_HEADER: &str = "Iteration  Current State       Next State     Best State    Current Cost    Next Cost        Best Cost     Temperature";

/// Renders the per-partition search table: banners, the eight-column table,
/// the explored-recipe count, the finished banner, and the expanded final
/// recipe.
pub fn render_trace(
    trace: &SearchTrace,
    partition_id: &str,
    explored: usize,
    best: &Recipe,
    library: &SubsequenceLibrary,
    engine: EngineKind,
) -> String {
    let mut out = String::new();
    let name = engine.banner_name();
    banner(&format!("ProteanCompiler :: Beginning {name}..."), &mut out);
    banner(
        &format!("ProteanCompiler :: Optimizing module \"{partition_id}\""),
        &mut out,
    );
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for row in &trace.rows {
        let best_state = row
            .best
            .as_ref()
            .map(|r| r.to_string())
            .unwrap_or_else(|| "-".to_string());
        let _ = writeln!(
            out,
            "{:<12}{:>5}{:>20}{:>15}{:>13}{:>16}{:>16}{:>17}",
            row.iteration,
            row.current.to_string(),
            row.next.to_string(),
            best_state,
            format_cost(row.current_cost, "-"),
            format_cost(row.next_cost, "FAIL"),
            format_cost(row.best_cost, "-"),
            format_temperature(row.temperature),
        );
    }
    out.push('\n');
    let _ = writeln!(out, "Explored Recipes Size: {explored}");
    let _ = writeln!(
        out,
        "ProteanCompiler :: {name} finished running for Module {partition_id}"
    );
    let _ = writeln!(out, "The final recipe accepted is \"{best}\":");
    let expansion = library
        .expand(best)
        .unwrap_or_else(|e| format!("<expansion error: {e}>"));
    let _ = writeln!(out, "{expansion}");
    out
}

/// Plain-text summary table, one line per partition.
pub fn render_summary(report: &DriverReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<20} {:<12} {:>10} {:>11} {:>9} {:>10}  Terminal",
        "Partition", "Best Recipe", "Best Score", "Iterations", "Failures", "Explored"
    );
    for report in &report.partitions {
        match &report.outcome {
            Ok(r) => {
                let _ = writeln!(
                    out,
                    "{:<20} {:<12} {:>10.4} {:>11} {:>9} {:>10}  {}",
                    r.id,
                    format!("\"{}\"", r.best),
                    r.best_score.value(),
                    r.iterations,
                    r.failures,
                    r.explored,
                    r.terminal_reason,
                );
            }
            Err(e) => {
                let _ = writeln!(out, "{:<20} FAILED: {e}", report.id);
            }
        }
    }
    out
}

#[derive(Serialize)]
struct JsonRow<'a> {
    id: &'a str,
    best_recipe: String,
    best_score: f64,
    iterations: usize,
    failures: usize,
    terminal_reason: String,
}

#[derive(Serialize)]
struct JsonErrorRow<'a> {
    id: &'a str,
    error: &'a str,
}

/// Machine-readable summary: one JSON object per partition, one per line.
pub fn summary_json_lines(report: &DriverReport) -> String {
    let mut out = String::new();
    for partition in &report.partitions {
        let line = match &partition.outcome {
            Ok(r) => serde_json::to_string(&JsonRow {
                id: &r.id,
                best_recipe: r.best.to_string(),
                best_score: r.best_score.value(),
                iterations: r.iterations,
                failures: r.failures,
                terminal_reason: r.terminal_reason.to_string(),
            }),
            Err(e) => serde_json::to_string(&JsonErrorRow {
                id: &partition.id,
                error: e,
            }),
        }
        .expect("summary rows serialize");
        out.push_str(&line);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::{CoolingSchedule, TraceRow};

    #[test]
    fn temperature_formatting_truncates() {
        let s = CoolingSchedule::geometric(100.0, 1.0, 20).unwrap();
        let expected = [
            "100.000", "79.432", "63.095", "50.118", "39.810", "31.622", "25.118", "19.952",
            "15.848", "12.589", "10.000", "7.943", "6.309", "5.011", "3.981", "3.162", "2.511",
            "1.995", "1.584", "1.258",
        ];
        for (k, want) in expected.iter().enumerate() {
            assert_eq!(
                &format_temperature(s.temperature_at(k).unwrap()),
                want,
                "k={k}"
            );
        }
    }

    #[test]
    fn cost_formatting() {
        assert_eq!(format_cost(Some(Score::new(1.05).unwrap()), "FAIL"), "1.05");
        assert_eq!(format_cost(Some(Score::new(1.0).unwrap()), "FAIL"), "1.00");
        assert_eq!(format_cost(None, "FAIL"), "FAIL");
    }

    #[test]
    fn trace_rows_align_with_reference_layout() {
        let lib = SubsequenceLibrary::default_table();
        let row = TraceRow {
            iteration: 0,
            current: Recipe::parse("ABCDE"),
            next: Recipe::parse("ABCDE"),
            best: Some(Recipe::parse("ABCDE")),
            current_cost: Some(Score::new(1.05).unwrap()),
            next_cost: Some(Score::new(1.05).unwrap()),
            best_cost: Some(Score::new(1.05).unwrap()),
            temperature: 100.0,
        };
        let trace = SearchTrace {
            rows: vec![row],
            terminal_reason: TerminalReason::IterationsExhausted,
        };
        let text = render_trace(
            &trace,
            "susan.c",
            20,
            &Recipe::parse("CD"),
            &lib,
            EngineKind::Annealing,
        );
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "ProteanCompiler :: Beginning Simulated Annealing...");
        assert_eq!(lines[1].chars().count(), lines[0].chars().count());
        assert!(lines[1].chars().all(|c| c == '-'));
        assert_eq!(lines[2], "ProteanCompiler :: Optimizing module \"susan.c\"");
        assert_eq!(lines[4], TRACE_HEADER);
        assert_eq!(
            lines[5],
            "0           ABCDE               ABCDE          ABCDE         1.05            1.05            1.05          100.000"
        );
        assert!(text.contains("Explored Recipes Size: 20"));
        assert!(text.contains(
            "ProteanCompiler :: Simulated Annealing finished running for Module susan.c"
        ));
        assert!(text.contains("The final recipe accepted is \"CD\":"));
        let expansion = format!(
            "{},{}",
            lib.pipeline('C').unwrap(),
            lib.pipeline('D').unwrap()
        );
        assert!(text.contains(&expansion));
    }

    #[test]
    fn empty_trace_renders_banners_and_header_only() {
        let lib = SubsequenceLibrary::default_table();
        let trace = SearchTrace {
            rows: vec![],
            terminal_reason: TerminalReason::EarlyExitStall,
        };
        let text = render_trace(&trace, "m", 0, &Recipe::empty(), &lib, EngineKind::Annealing);
        assert!(text.contains(TRACE_HEADER));
        assert!(text.contains("Explored Recipes Size: 0"));
        assert!(text.contains("The final recipe accepted is \"\":"));
    }

    #[test]
    fn stderr_excerpt_is_bounded() {
        let big = vec![b'x'; 10_000];
        let excerpt = stderr_excerpt(&big);
        assert!(excerpt.len() <= STDERR_EXCERPT_LIMIT + 3);
        assert!(excerpt.ends_with("..."));
    }
}
