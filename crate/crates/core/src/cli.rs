//! Command-line front end: flag parsing, config-file overlay, and the
//! top-level run loop.
//!
//! Precedence, lowest to highest: built-in defaults, `--config` file, the
//! `PROTEAN_SCRATCH_DIR` environment variable, the comma-packed
//! `--protean-args` compatibility string, then dedicated flags. Exit codes:
//! 0 success, 1 partition or finalize failure, 2 usage/configuration error.

use crate::cost::LinearModel;
use crate::driver::{
    render_summary, render_trace, run_driver, summary_json_lines, ApplyConfig, CostModelSpec,
    DriverConfig, EngineChoice,
};
use crate::ir::FeatureSchema;
use crate::proc::CommandTemplate;
use crate::recipe::SubsequenceLibrary;
use crate::search::{
    AnnealerConfig, CoolingKind, CoolingSchedule, CrossoverKind, GaConfig, MutationKind,
};
use clap::{CommandFactory, FromArgMatches, Parser, ValueEnum};
use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Duration;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTITION_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const SCRATCH_ENV_VAR: &str = "PROTEAN_SCRATCH_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CoolingArg {
    Geometric,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CrossoverArg {
    SinglePoint,
    DoublePoint,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MutationArg {
    FlipOne,
    SwapTwo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CostTypeArg {
    IrAnalysis,
    Mca,
    Instcount,
    Filesize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Anneal,
    Ga,
}

#[derive(Parser, Debug)]
#[command(
    name = "protean",
    version,
    about = "Phase-ordering autotuner: searches per-partition recipes of pass subsequences through an external optimizer",
    max_term_width = 100
)]
struct Args {
    /// Textual IR input files; each file becomes one partition
    inputs: Vec<PathBuf>,

    /// Cooling schedule for simulated annealing
    #[arg(long, value_enum, default_value_t = CoolingArg::Geometric)]
    cooling: CoolingArg,

    /// Maximum iterations for simulated annealing
    #[arg(long, default_value_t = 100)]
    max_iterations: usize,

    /// RNG seed; runs are reproducible per seed
    #[arg(long, default_value_t = 123)]
    rng_val: u64,

    /// Maximum temperature for simulated annealing
    #[arg(long, default_value_t = 100.0)]
    max_temperature: f64,

    /// Temperature floor reached at the final iteration
    #[arg(long, default_value_t = 1.0)]
    t_floor: f64,

    /// Number of initial random samples for simulated annealing
    #[arg(long, default_value_t = 20)]
    initial_sample_size: usize,

    /// Mutation rate for the genetic recommender
    #[arg(long, default_value_t = 0.05)]
    mutation_rate: f64,

    /// Crossover rate for the genetic recommender
    #[arg(long, default_value_t = 0.95)]
    crossover_rate: f64,

    /// Population size for the genetic recommender
    #[arg(long, default_value_t = 10)]
    population_size: usize,

    /// Generations for the genetic recommender
    #[arg(long, default_value_t = 100)]
    generations: usize,

    /// Individuals carried unchanged between generations
    #[arg(long, default_value_t = 1)]
    elitism: usize,

    /// Tournament size for parent selection
    #[arg(long, default_value_t = 2)]
    tournament_size: usize,

    /// Crossover method for the genetic recommender
    #[arg(long, value_enum, default_value_t = CrossoverArg::SinglePoint)]
    crossover_type: CrossoverArg,

    /// Mutation method for the genetic recommender
    #[arg(long, value_enum, default_value_t = MutationArg::FlipOne)]
    mutation_type: MutationArg,

    /// Cost function used to score transformed IR
    #[arg(long, value_enum, default_value_t = CostTypeArg::IrAnalysis)]
    cost_type: CostTypeArg,

    /// Collect static features in-process and feed them to the scorer
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false)]
    use_protean_collect: bool,

    /// Accepted for compatibility; shared-memory IPC is not supported
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false)]
    module_level_ipc: bool,

    /// Search engine
    #[arg(long, value_enum, default_value_t = EngineArg::Anneal)]
    engine: EngineArg,

    /// Maximum number of subsequences in a recipe
    #[arg(long, default_value_t = 5)]
    max_recipe_length: usize,

    /// Consecutive non-improving evaluations before early exit
    #[arg(long, default_value_t = 10)]
    stall_limit: usize,

    /// Subsequence library: `default`, `portable`, or a file path
    #[arg(long, default_value = "default")]
    library: String,

    /// Optimizer command template with {input} {output} {pipeline}
    #[arg(long)]
    optimizer_cmd: Option<String>,

    /// External scorer command template (cost-type ir-analysis)
    #[arg(long)]
    scorer_cmd: Option<String>,

    /// Linear model weight file (cost-type ir-analysis)
    #[arg(long)]
    model_file: Option<PathBuf>,

    /// Cycle-count command template with {input} (cost-type mca)
    #[arg(long)]
    mca_cmd: Option<String>,

    /// Line prefix announcing the cycle count in the analyzer output
    #[arg(long, default_value = "Total Cycles:")]
    mca_pattern: String,

    /// Feature schema override file (one `name scope [kind]` per line)
    #[arg(long)]
    schema: Option<PathBuf>,

    /// Worker pool width; 0 uses the available parallelism
    #[arg(long, default_value_t = 0)]
    workers: usize,

    /// Command run once over all final IR paths after every partition
    #[arg(long)]
    finalize_cmd: Option<String>,

    /// Print the per-partition search table
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false)]
    output_table: bool,

    /// Write the machine-readable summary (one JSON object per line)
    #[arg(long)]
    json_out: Option<PathBuf>,

    /// Scratch root for work directories (also: PROTEAN_SCRATCH_DIR)
    #[arg(long)]
    scratch_dir: Option<PathBuf>,

    /// Baseline pipeline text; defaults to the canonical recipe expansion
    #[arg(long)]
    baseline_pipeline: Option<String>,

    /// Optimizer timeout in seconds
    #[arg(long, default_value_t = 60)]
    optimizer_timeout: u64,

    /// Scorer / cycle-analyzer timeout in seconds
    #[arg(long, default_value_t = 30)]
    scorer_timeout: u64,

    /// `key = value` file merged beneath command-line flags
    #[arg(long)]
    config: Option<PathBuf>,

    /// Comma-packed `-name=value` items mirroring the forwarding style
    #[arg(long)]
    protean_args: Option<String>,

    /// Print the resolved configuration and exit
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false)]
    print_config: bool,
}

/// Fully resolved knob set.
#[derive(Debug, Clone)]
pub struct CliConfig {
    pub cooling: CoolingArg,
    pub max_iterations: usize,
    pub rng_val: u64,
    pub max_temperature: f64,
    pub t_floor: f64,
    pub initial_sample_size: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub population_size: usize,
    pub generations: usize,
    pub elitism: usize,
    pub tournament_size: usize,
    pub crossover_type: CrossoverArg,
    pub mutation_type: MutationArg,
    pub cost_type: CostTypeArg,
    pub use_protean_collect: bool,
    pub module_level_ipc: bool,
    pub engine: EngineArg,
    pub max_recipe_length: usize,
    pub stall_limit: usize,
    pub library: String,
    pub optimizer_cmd: Option<String>,
    pub scorer_cmd: Option<String>,
    pub model_file: Option<PathBuf>,
    pub mca_cmd: Option<String>,
    pub mca_pattern: String,
    pub schema: Option<PathBuf>,
    pub workers: usize,
    pub finalize_cmd: Option<String>,
    pub output_table: bool,
    pub json_out: Option<PathBuf>,
    pub scratch_dir: Option<PathBuf>,
    pub baseline_pipeline: Option<String>,
    pub optimizer_timeout: u64,
    pub scorer_timeout: u64,
    pub inputs: Vec<PathBuf>,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            cooling: CoolingArg::Geometric,
            max_iterations: 100,
            rng_val: 123,
            max_temperature: 100.0,
            t_floor: 1.0,
            initial_sample_size: 20,
            mutation_rate: 0.05,
            crossover_rate: 0.95,
            population_size: 10,
            generations: 100,
            elitism: 1,
            tournament_size: 2,
            crossover_type: CrossoverArg::SinglePoint,
            mutation_type: MutationArg::FlipOne,
            cost_type: CostTypeArg::IrAnalysis,
            use_protean_collect: false,
            module_level_ipc: false,
            engine: EngineArg::Anneal,
            max_recipe_length: 5,
            stall_limit: 10,
            library: "default".to_string(),
            optimizer_cmd: None,
            scorer_cmd: None,
            model_file: None,
            mca_cmd: None,
            mca_pattern: "Total Cycles:".to_string(),
            schema: None,
            workers: 0,
            finalize_cmd: None,
            output_table: false,
            json_out: None,
            scratch_dir: None,
            baseline_pipeline: None,
            optimizer_timeout: 60,
            scorer_timeout: 30,
            inputs: Vec::new(),
        }
    }
}

fn parse_bool(key: &str, value: Option<&str>) -> Result<bool, String> {
    match value {
        None => Ok(true),
        Some("true") | Some("1") => Ok(true),
        Some("false") | Some("0") => Ok(false),
        Some(other) => Err(format!("{key}: expected true or false, got `{other}`")),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: Option<&str>) -> Result<T, String> {
    let v = value.ok_or_else(|| format!("{key}: missing value"))?;
    v.parse()
        .map_err(|_| format!("{key}: unparseable value `{v}`"))
}

fn parse_enum<T: ValueEnum + Clone>(key: &str, value: Option<&str>) -> Result<T, String> {
    let v = value.ok_or_else(|| format!("{key}: missing value"))?;
    T::from_str(v, true).map_err(|_| {
        let allowed: Vec<String> = T::value_variants()
            .iter()
            .filter_map(|x| x.to_possible_value().map(|p| p.get_name().to_string()))
            .collect();
        format!(
            "{key}: invalid value `{v}` (expected one of: {})",
            allowed.join(", ")
        )
    })
}

fn parse_text(key: &str, value: Option<&str>) -> Result<String, String> {
    value
        .map(str::to_string)
        .ok_or_else(|| format!("{key}: missing value"))
}

impl CliConfig {
    /// Applies one `key = value` assignment; shared by the config file and
    /// the packed compatibility string.
    fn set(&mut self, key: &str, value: Option<&str>) -> Result<(), String> {
        match key {
            "cooling" => self.cooling = parse_enum(key, value)?,
            "max-iterations" => self.max_iterations = parse_num(key, value)?,
            "rng-val" => self.rng_val = parse_num(key, value)?,
            "max-temperature" => self.max_temperature = parse_num(key, value)?,
            "t-floor" => self.t_floor = parse_num(key, value)?,
            "initial-sample-size" => self.initial_sample_size = parse_num(key, value)?,
            "mutation-rate" => self.mutation_rate = parse_num(key, value)?,
            "crossover-rate" => self.crossover_rate = parse_num(key, value)?,
            "population-size" => self.population_size = parse_num(key, value)?,
            "generations" => self.generations = parse_num(key, value)?,
            "elitism" => self.elitism = parse_num(key, value)?,
            "tournament-size" => self.tournament_size = parse_num(key, value)?,
            "crossover-type" => self.crossover_type = parse_enum(key, value)?,
            "mutation-type" => self.mutation_type = parse_enum(key, value)?,
            "cost-type" => self.cost_type = parse_enum(key, value)?,
            "use-protean-collect" => self.use_protean_collect = parse_bool(key, value)?,
            "module-level-ipc" => self.module_level_ipc = parse_bool(key, value)?,
            "engine" => self.engine = parse_enum(key, value)?,
            "max-recipe-length" => self.max_recipe_length = parse_num(key, value)?,
            "stall-limit" => self.stall_limit = parse_num(key, value)?,
            "library" => self.library = parse_text(key, value)?,
            "optimizer-cmd" => self.optimizer_cmd = Some(parse_text(key, value)?),
            "scorer-cmd" => self.scorer_cmd = Some(parse_text(key, value)?),
            "model-file" => self.model_file = Some(PathBuf::from(parse_text(key, value)?)),
            "mca-cmd" => self.mca_cmd = Some(parse_text(key, value)?),
            "mca-pattern" => self.mca_pattern = parse_text(key, value)?,
            "schema" => self.schema = Some(PathBuf::from(parse_text(key, value)?)),
            "workers" => self.workers = parse_num(key, value)?,
            "finalize-cmd" => self.finalize_cmd = Some(parse_text(key, value)?),
            "output-table" | "protean-output-table" => {
                self.output_table = parse_bool(key, value)?
            }
            "json-out" => self.json_out = Some(PathBuf::from(parse_text(key, value)?)),
            "scratch-dir" => self.scratch_dir = Some(PathBuf::from(parse_text(key, value)?)),
            "baseline-pipeline" => self.baseline_pipeline = Some(parse_text(key, value)?),
            "optimizer-timeout" => self.optimizer_timeout = parse_num(key, value)?,
            "scorer-timeout" => self.scorer_timeout = parse_num(key, value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    fn render(&self) -> String {
        let opt = |o: &Option<String>| o.clone().unwrap_or_else(|| "<unset>".into());
        let path = |o: &Option<PathBuf>| {
            o.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "<unset>".into())
        };
        let enum_name = |v: &dyn std::fmt::Debug| format!("{v:?}").to_lowercase();
        let mut out = String::new();
        let mut kv = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        kv("cooling", enum_name(&self.cooling));
        kv("max-iterations", self.max_iterations.to_string());
        kv("rng-val", self.rng_val.to_string());
        kv("max-temperature", self.max_temperature.to_string());
        kv("t-floor", self.t_floor.to_string());
        kv("initial-sample-size", self.initial_sample_size.to_string());
        kv("mutation-rate", self.mutation_rate.to_string());
        kv("crossover-rate", self.crossover_rate.to_string());
        kv("population-size", self.population_size.to_string());
        kv("generations", self.generations.to_string());
        kv("elitism", self.elitism.to_string());
        kv("tournament-size", self.tournament_size.to_string());
        kv("crossover-type", enum_name(&self.crossover_type));
        kv("mutation-type", enum_name(&self.mutation_type));
        kv("cost-type", enum_name(&self.cost_type));
        kv("use-protean-collect", self.use_protean_collect.to_string());
        kv("module-level-ipc", self.module_level_ipc.to_string());
        kv("engine", enum_name(&self.engine));
        kv("max-recipe-length", self.max_recipe_length.to_string());
        kv("stall-limit", self.stall_limit.to_string());
        kv("library", self.library.clone());
        kv("optimizer-cmd", opt(&self.optimizer_cmd));
        kv("scorer-cmd", opt(&self.scorer_cmd));
        kv("model-file", path(&self.model_file));
        kv("mca-cmd", opt(&self.mca_cmd));
        kv("mca-pattern", self.mca_pattern.clone());
        kv("schema", path(&self.schema));
        kv("workers", self.workers.to_string());
        kv("finalize-cmd", opt(&self.finalize_cmd));
        kv("output-table", self.output_table.to_string());
        kv("json-out", path(&self.json_out));
        kv("scratch-dir", path(&self.scratch_dir));
        kv("baseline-pipeline", opt(&self.baseline_pipeline));
        kv("optimizer-timeout", self.optimizer_timeout.to_string());
        kv("scorer-timeout", self.scorer_timeout.to_string());
        out
    }
}

/// Parses a `key = value` config file into assignments; `#` comments and
/// blank lines are ignored, duplicate keys rejected.
pub fn load_config_file(path: &std::path::Path) -> Result<Vec<(String, String)>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
    let mut seen = std::collections::HashSet::new();
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!(
                "{}: line {lineno}: expected `key = value`",
                path.display()
            ));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(format!("{}: line {lineno}: empty key", path.display()));
        }
        if matches!(key.as_str(), "config" | "protean-args") {
            return Err(format!(
                "{}: line {lineno}: `{key}` is not allowed in a config file",
                path.display()
            ));
        }
        if !seen.insert(key.clone()) {
            return Err(format!(
                "{}: line {lineno}: duplicate key `{key}`",
                path.display()
            ));
        }
        pairs.push((key, value));
    }
    Ok(pairs)
}

/// Splits the comma-packed compatibility string into `(key, value)` items.
/// Items look like `-max-iterations=20` or `-protean-output-table`; a bare
/// `-Wprotean` marker is ignored.
pub fn parse_packed_args(packed: &str) -> Result<Vec<(String, Option<String>)>, String> {
    let mut items = Vec::new();
    for raw in packed.split(',') {
        let item = raw.trim();
        if item.is_empty() || item == "-Wprotean" || item == "Wprotean" {
            continue;
        }
        let stripped = item
            .strip_prefix("--")
            .or_else(|| item.strip_prefix('-'))
            .unwrap_or(item);
        match stripped.split_once('=') {
            Some((key, value)) => items.push((key.to_string(), Some(value.to_string()))),
            None => items.push((stripped.to_string(), None)),
        }
    }
    Ok(items)
}

/// Resolves the full configuration from argv. Returns the config plus the
/// already-parsed clap matches, or a diagnostic.
pub fn parse_args<I, T>(argv: I) -> Result<CliConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = Args::command().try_get_matches_from(argv)?;
    let args = Args::from_arg_matches(&matches).expect("matches come from Args");
    resolve(args, &matches).map_err(|message| {
        clap::Error::raw(clap::error::ErrorKind::ValueValidation, format!("{message}\n"))
    })
}

fn resolve(args: Args, matches: &clap::ArgMatches) -> Result<CliConfig, String> {
    let mut cfg = CliConfig::default();

    if let Some(path) = &args.config {
        for (key, value) in load_config_file(path)? {
            cfg.set(&key, Some(&value))
                .map_err(|e| format!("{}: {e}", path.display()))?;
        }
    }

    if let Ok(dir) = std::env::var(SCRATCH_ENV_VAR) {
        if !dir.is_empty() {
            cfg.scratch_dir = Some(PathBuf::from(dir));
        }
    }

    if let Some(packed) = &args.protean_args {
        for (key, value) in parse_packed_args(packed)? {
            cfg.set(&key, value.as_deref())
                .map_err(|e| format!("--protean-args: {e}"))?;
        }
    }

    // dedicated flags win over every other layer
    let explicit = |id: &str| {
        matches.value_source(id) == Some(clap::parser::ValueSource::CommandLine)
    };
    if explicit("cooling") {
        cfg.cooling = args.cooling;
    }
    if explicit("max_iterations") {
        cfg.max_iterations = args.max_iterations;
    }
    if explicit("rng_val") {
        cfg.rng_val = args.rng_val;
    }
    if explicit("max_temperature") {
        cfg.max_temperature = args.max_temperature;
    }
    if explicit("t_floor") {
        cfg.t_floor = args.t_floor;
    }
    if explicit("initial_sample_size") {
        cfg.initial_sample_size = args.initial_sample_size;
    }
    if explicit("mutation_rate") {
        cfg.mutation_rate = args.mutation_rate;
    }
    if explicit("crossover_rate") {
        cfg.crossover_rate = args.crossover_rate;
    }
    if explicit("population_size") {
        cfg.population_size = args.population_size;
    }
    if explicit("generations") {
        cfg.generations = args.generations;
    }
    if explicit("elitism") {
        cfg.elitism = args.elitism;
    }
    if explicit("tournament_size") {
        cfg.tournament_size = args.tournament_size;
    }
    if explicit("crossover_type") {
        cfg.crossover_type = args.crossover_type;
    }
    if explicit("mutation_type") {
        cfg.mutation_type = args.mutation_type;
    }
    if explicit("cost_type") {
        cfg.cost_type = args.cost_type;
    }
    if explicit("use_protean_collect") {
        cfg.use_protean_collect = args.use_protean_collect;
    }
    if explicit("module_level_ipc") {
        cfg.module_level_ipc = args.module_level_ipc;
    }
    if explicit("engine") {
        cfg.engine = args.engine;
    }
    if explicit("max_recipe_length") {
        cfg.max_recipe_length = args.max_recipe_length;
    }
    if explicit("stall_limit") {
        cfg.stall_limit = args.stall_limit;
    }
    if explicit("library") {
        cfg.library = args.library.clone();
    }
    if explicit("optimizer_cmd") {
        cfg.optimizer_cmd = args.optimizer_cmd.clone();
    }
    if explicit("scorer_cmd") {
        cfg.scorer_cmd = args.scorer_cmd.clone();
    }
    if explicit("model_file") {
        cfg.model_file = args.model_file.clone();
    }
    if explicit("mca_cmd") {
        cfg.mca_cmd = args.mca_cmd.clone();
    }
    if explicit("mca_pattern") {
        cfg.mca_pattern = args.mca_pattern.clone();
    }
    if explicit("schema") {
        cfg.schema = args.schema.clone();
    }
    if explicit("workers") {
        cfg.workers = args.workers;
    }
    if explicit("finalize_cmd") {
        cfg.finalize_cmd = args.finalize_cmd.clone();
    }
    if explicit("output_table") {
        cfg.output_table = args.output_table;
    }
    if explicit("json_out") {
        cfg.json_out = args.json_out.clone();
    }
    if explicit("scratch_dir") {
        cfg.scratch_dir = args.scratch_dir.clone();
    }
    if explicit("baseline_pipeline") {
        cfg.baseline_pipeline = args.baseline_pipeline.clone();
    }
    if explicit("optimizer_timeout") {
        cfg.optimizer_timeout = args.optimizer_timeout;
    }
    if explicit("scorer_timeout") {
        cfg.scorer_timeout = args.scorer_timeout;
    }

    cfg.inputs = args.inputs;
    validate_ranges(&cfg)?;
    if args.print_config {
        // handled by the caller; carried through a side channel is not
        // worth it, so re-check the flag there
    }
    Ok(cfg)
}

fn validate_ranges(cfg: &CliConfig) -> Result<(), String> {
    for (name, rate) in [
        ("mutation-rate", cfg.mutation_rate),
        ("crossover-rate", cfg.crossover_rate),
    ] {
        if !(0.0..=1.0).contains(&rate) {
            return Err(format!("{name} must lie in [0, 1], got {rate}"));
        }
    }
    Ok(())
}

/// Builds the driver configuration from resolved knobs; errors are
/// usage-level diagnostics.
pub fn build_driver_config(cfg: &CliConfig) -> Result<DriverConfig, String> {
    let library = match cfg.library.as_str() {
        "default" => SubsequenceLibrary::default_table(),
        "portable" => SubsequenceLibrary::portable(),
        path => SubsequenceLibrary::from_file(std::path::Path::new(path))
            .map_err(|e| format!("--library: {e}"))?,
    };

    let schema = match &cfg.schema {
        Some(path) => FeatureSchema::from_file(path).map_err(|e| format!("--schema: {e}"))?,
        None => FeatureSchema::pfs(),
    };

    let optimizer_text = cfg
        .optimizer_cmd
        .as_ref()
        .ok_or("missing --optimizer-cmd (or `optimizer-cmd` in the config file)")?;
    let optimizer =
        CommandTemplate::parse(optimizer_text).map_err(|e| format!("--optimizer-cmd: {e}"))?;
    let mut apply = ApplyConfig::new(optimizer);
    apply.timeout = Duration::from_secs(cfg.optimizer_timeout);
    apply.baseline_pipeline = cfg.baseline_pipeline.clone();

    let scorer_timeout = Duration::from_secs(cfg.scorer_timeout);
    let cost = match cfg.cost_type {
        CostTypeArg::Instcount => CostModelSpec::InstCount,
        CostTypeArg::Filesize => CostModelSpec::FileSize,
        CostTypeArg::Mca => {
            let text = cfg.mca_cmd.as_ref().ok_or("cost-type mca needs --mca-cmd")?;
            let cmd = CommandTemplate::parse(text).map_err(|e| format!("--mca-cmd: {e}"))?;
            cmd.require_placeholders(&["input"])
                .map_err(|e| format!("--mca-cmd: {e}"))?;
            CostModelSpec::Mca {
                cmd,
                timeout: scorer_timeout,
                pattern: cfg.mca_pattern.clone(),
            }
        }
        CostTypeArg::IrAnalysis => match (&cfg.scorer_cmd, &cfg.model_file) {
            (Some(_), Some(_)) => {
                return Err("choose one of --scorer-cmd and --model-file, not both".into())
            }
            (None, None) => {
                return Err(
                    "cost-type ir-analysis needs --scorer-cmd or --model-file".into(),
                )
            }
            (Some(text), None) => {
                let cmd =
                    CommandTemplate::parse(text).map_err(|e| format!("--scorer-cmd: {e}"))?;
                if cfg.use_protean_collect {
                    CostModelSpec::ExternalFeatures {
                        cmd,
                        timeout: scorer_timeout,
                    }
                } else {
                    cmd.require_placeholders(&["input"]).map_err(|_| {
                        "--scorer-cmd must contain {input} exactly once when \
                         use-protean-collect is false"
                            .to_string()
                    })?;
                    CostModelSpec::ExternalFile {
                        cmd,
                        timeout: scorer_timeout,
                    }
                }
            }
            (None, Some(path)) => {
                let model = LinearModel::from_file(path, schema.len())
                    .map_err(|e| format!("--model-file: {e}"))?;
                CostModelSpec::Linear(model)
            }
        },
    };

    let engine = match cfg.engine {
        EngineArg::Anneal => {
            let kind = match cfg.cooling {
                CoolingArg::Geometric => CoolingKind::Geometric,
                CoolingArg::Linear => CoolingKind::Linear,
            };
            let cooling = CoolingSchedule {
                kind,
                t_max: cfg.max_temperature,
                t_floor: cfg.t_floor,
                max_iterations: cfg.max_iterations,
            };
            EngineChoice::Annealing(AnnealerConfig {
                cooling,
                max_iterations: cfg.max_iterations,
                initial_sample_size: cfg.initial_sample_size,
                rng_seed: cfg.rng_val,
                stall_limit: cfg.stall_limit,
            })
        }
        EngineArg::Ga => EngineChoice::Genetic(GaConfig {
            population_size: cfg.population_size,
            mutation_rate: cfg.mutation_rate,
            crossover_rate: cfg.crossover_rate,
            crossover: match cfg.crossover_type {
                CrossoverArg::SinglePoint => CrossoverKind::SinglePoint,
                CrossoverArg::DoublePoint => CrossoverKind::DoublePoint,
                CrossoverArg::Uniform => CrossoverKind::Uniform,
            },
            mutation: match cfg.mutation_type {
                MutationArg::FlipOne => MutationKind::FlipOne,
                MutationArg::SwapTwo => MutationKind::SwapTwo,
            },
            generations: cfg.generations,
            elitism: cfg.elitism,
            tournament_size: cfg.tournament_size,
            rng_seed: cfg.rng_val,
        }),
    };

    let scratch_root = cfg.scratch_dir.clone().unwrap_or_else(|| {
        std::env::temp_dir().join(format!("protean-{}", std::process::id()))
    });

    let finalize = match &cfg.finalize_cmd {
        Some(text) => {
            Some(CommandTemplate::parse(text).map_err(|e| format!("--finalize-cmd: {e}"))?)
        }
        None => None,
    };

    Ok(DriverConfig {
        library,
        max_length: cfg.max_recipe_length,
        engine,
        apply,
        cost,
        schema,
        stall_limit: cfg.stall_limit,
        workers: cfg.workers,
        scratch_root,
        finalize,
    })
}

/// Full CLI entry point; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let matches = match Args::command().try_get_matches_from(argv.clone()) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let print_config = matches.get_flag("print_config");
    let cfg = match parse_args(argv) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = e.print();
            return EXIT_USAGE;
        }
    };

    if cfg.module_level_ipc {
        eprintln!("protean: module-level-ipc is not supported, using temp files");
    }

    if print_config {
        print!("{}", cfg.render());
        return EXIT_OK;
    }

    if cfg.inputs.is_empty() {
        eprintln!("protean: no input files given");
        return EXIT_USAGE;
    }

    let driver_cfg = match build_driver_config(&cfg) {
        Ok(c) => c,
        Err(message) => {
            eprintln!("protean: {message}");
            return EXIT_USAGE;
        }
    };
    if let Err(e) = std::fs::create_dir_all(&driver_cfg.scratch_root) {
        eprintln!(
            "protean: cannot create scratch root {}: {e}",
            driver_cfg.scratch_root.display()
        );
        return EXIT_USAGE;
    }

    let report = match run_driver(&cfg.inputs, &driver_cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("protean: {e}");
            return EXIT_USAGE;
        }
    };

    if cfg.output_table {
        for partition in &report.partitions {
            if let Ok(result) = &partition.outcome {
                print!(
                    "{}",
                    render_trace(
                        &result.trace,
                        &result.id,
                        result.explored,
                        &result.best,
                        &driver_cfg.library,
                        result.engine,
                    )
                );
                println!();
            }
        }
    }

    print!("{}", render_summary(&report));
    if let Some(err) = &report.finalize_error {
        eprintln!("protean: finalize: {err}");
    }

    if let Some(path) = &cfg.json_out {
        let json = summary_json_lines(&report);
        if let Err(e) = std::fs::write(path, json) {
            eprintln!("protean: cannot write {}: {e}", path.display());
            return EXIT_PARTITION_FAILURE;
        }
    }

    if report.any_failed() {
        EXIT_PARTITION_FAILURE
    } else {
        EXIT_OK
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<CliConfig, clap::Error> {
        let mut argv = vec!["protean"];
        argv.extend_from_slice(args);
        parse_args(argv)
    }

    #[test]
    fn defaults_match_the_documented_values() {
        let cfg = parse(&[]).unwrap();
        assert_eq!(cfg.cooling, CoolingArg::Geometric);
        assert_eq!(cfg.max_iterations, 100);
        assert_eq!(cfg.rng_val, 123);
        assert_eq!(cfg.max_temperature, 100.0);
        assert_eq!(cfg.initial_sample_size, 20);
        assert_eq!(cfg.mutation_rate, 0.05);
        assert_eq!(cfg.crossover_rate, 0.95);
        assert_eq!(cfg.population_size, 10);
        assert_eq!(cfg.crossover_type, CrossoverArg::SinglePoint);
        assert_eq!(cfg.mutation_type, MutationArg::FlipOne);
        assert_eq!(cfg.cost_type, CostTypeArg::IrAnalysis);
        assert!(!cfg.use_protean_collect);
        assert_eq!(cfg.engine, EngineArg::Anneal);
        assert_eq!(cfg.max_recipe_length, 5);
        assert_eq!(cfg.stall_limit, 10);
    }

    #[test]
    fn packed_args_mirror_the_forwarding_style() {
        let cfg = parse(&["--protean-args=-max-iterations=20,-protean-output-table"]).unwrap();
        assert_eq!(cfg.max_iterations, 20);
        assert!(cfg.output_table);
        // the forwarding marker itself is tolerated
        let cfg =
            parse(&["--protean-args=-Wprotean,-use-protean-collect=false,-max-iterations=20"])
                .unwrap();
        assert_eq!(cfg.max_iterations, 20);
        assert!(!cfg.use_protean_collect);
    }

    #[test]
    fn packed_args_reject_unknown_tokens() {
        let err = parse(&["--protean-args=-no-such-knob=1"]).unwrap_err();
        assert!(err.to_string().contains("no-such-knob"));
    }

    #[test]
    fn out_of_range_rates_are_rejected() {
        assert!(parse(&["--mutation-rate=1.5"]).is_err());
        assert!(parse(&["--crossover-rate", "-0.1"]).is_err());
    }

    #[test]
    fn flag_forms_with_equals_and_space_both_work() {
        let a = parse(&["--max-iterations=42"]).unwrap();
        let b = parse(&["--max-iterations", "42"]).unwrap();
        assert_eq!(a.max_iterations, 42);
        assert_eq!(b.max_iterations, 42);
    }

    #[test]
    fn config_file_layering_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("protean.conf");
        std::fs::write(&path, "# run settings\nrng-val = 7\nmax-iterations = 33\n").unwrap();
        let p = path.display().to_string();

        let cfg = parse(&["--config", &p]).unwrap();
        assert_eq!(cfg.rng_val, 7);
        assert_eq!(cfg.max_iterations, 33);

        // explicit flags win, even at the default value
        let cfg = parse(&["--config", &p, "--rng-val", "9"]).unwrap();
        assert_eq!(cfg.rng_val, 9);
        let cfg = parse(&["--config", &p, "--rng-val", "123"]).unwrap();
        assert_eq!(cfg.rng_val, 123);

        std::fs::write(&path, "rng-val = 7\nrng-val = 8\n").unwrap();
        assert!(parse(&["--config", &p]).is_err());
        std::fs::write(&path, "mystery-knob = 1\n").unwrap();
        assert!(parse(&["--config", &p]).is_err());
        std::fs::write(&path, "not a kv line\n").unwrap();
        let err = parse(&["--config", &p]).unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn empty_config_file_keeps_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.conf");
        std::fs::write(&path, "").unwrap();
        let cfg = parse(&["--config", &path.display().to_string()]).unwrap();
        assert_eq!(cfg.rng_val, 123);
        assert_eq!(cfg.max_iterations, 100);
    }

    #[test]
    fn parse_args_is_total_over_fuzzed_argv() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let vocab = [
            "--max-iterations", "20", "--engine", "ga", "anneal", "--cooling", "-x", "--",
            "--protean-args=-a=b", "foo.ll", "--mutation-rate", "2.0", "=", "--library",
        ];
        for _ in 0..500 {
            let n = rng.gen_range(0..6);
            let mut argv = vec!["protean".to_string()];
            for _ in 0..n {
                argv.push(vocab[rng.gen_range(0..vocab.len())].to_string());
            }
            let _ = parse_args(argv); // must not panic
        }
    }

    #[test]
    fn driver_config_requires_cost_model_inputs() {
        let mut cfg = parse(&[]).unwrap();
        cfg.optimizer_cmd = Some("opt -passes={pipeline} {input} -o {output}".into());
        // ir-analysis without scorer or model
        let err = build_driver_config(&cfg).unwrap_err();
        assert!(err.contains("ir-analysis"));
        cfg.scorer_cmd = Some("scorer".into());
        cfg.use_protean_collect = true;
        assert!(build_driver_config(&cfg).is_ok());
        // path-mode scorer needs {input}
        cfg.use_protean_collect = false;
        assert!(build_driver_config(&cfg).is_err());
        cfg.scorer_cmd = Some("scorer {input}".into());
        assert!(build_driver_config(&cfg).is_ok());
    }

    #[test]
    fn missing_optimizer_is_a_usage_error() {
        let cfg = parse(&[]).unwrap();
        let err = build_driver_config(&cfg).unwrap_err();
        assert!(err.contains("optimizer-cmd"));
    }
}
