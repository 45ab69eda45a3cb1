//! Simulated-annealing and genetic search over recipes.
//!
//! Both engines drive an abstract [`CostEvaluator`]: evaluations either
//! succeed with a score (higher is better), fail and reject the candidate,
//! or abort the whole run with an infrastructure error. The evaluator can
//! also request an early stop, which the driver uses for its
//! unchanged-output detection.

use crate::cost::{CostError, Score, ScoreOutcome};
use crate::recipe::{Recipe, RecipeSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid engine configuration: {0}")]
    Config(String),
    #[error("cost callback aborted the run: {0}")]
    Cost(#[from] CostError),
    #[error("no recipe evaluated successfully")]
    NoSuccessfulEvaluation,
}

#[derive(Debug, Error)]
pub enum CoolingError {
    #[error("iteration {k} is outside 0..{max}")]
    OutOfRange { k: usize, max: usize },
}

#[derive(Debug, Error)]
pub enum AcceptanceError {
    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),
    #[error("non-finite cost input")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoolingKind {
    Geometric,
    Linear,
}

/// Temperature schedule over a fixed iteration horizon.
///
/// Geometric decay multiplies by a constant ratio each step, calibrated so
/// the floor would be reached exactly at `max_iterations`; it never touches
/// zero. Linear decay interpolates from `t_max` down toward `t_floor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoolingSchedule {
    pub kind: CoolingKind,
    pub t_max: f64,
    pub t_floor: f64,
    pub max_iterations: usize,
}

impl CoolingSchedule {
    pub fn geometric(t_max: f64, t_floor: f64, max_iterations: usize) -> Result<Self, EngineError> {
        let s = Self {
            kind: CoolingKind::Geometric,
            t_max,
            t_floor,
            max_iterations,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn linear(t_max: f64, t_floor: f64, max_iterations: usize) -> Result<Self, EngineError> {
        let s = Self {
            kind: CoolingKind::Linear,
            t_max,
            t_floor,
            max_iterations,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.t_max.is_finite() && self.t_floor.is_finite()) {
            return Err(EngineError::Config("non-finite temperature bound".into()));
        }
        if self.max_iterations < 1 {
            return Err(EngineError::Config("max_iterations must be >= 1".into()));
        }
        if self.t_max < self.t_floor {
            return Err(EngineError::Config(format!(
                "t_max {} is below t_floor {}",
                self.t_max, self.t_floor
            )));
        }
        match self.kind {
            CoolingKind::Geometric if self.t_floor <= 0.0 => Err(EngineError::Config(
                "geometric cooling needs t_floor > 0".into(),
            )),
            CoolingKind::Linear if self.t_floor < 0.0 => Err(EngineError::Config(
                "linear cooling needs t_floor >= 0".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Temperature at iteration `k`, `0 <= k < max_iterations`.
    pub fn temperature_at(&self, k: usize) -> Result<f64, CoolingError> {
        if k >= self.max_iterations {
            return Err(CoolingError::OutOfRange {
                k,
                max: self.max_iterations,
            });
        }
        let n = self.max_iterations as f64;
        Ok(match self.kind {
            CoolingKind::Geometric => {
                // t_max * r^k with r = (t_floor / t_max)^(1/n)
                self.t_max * (self.t_floor / self.t_max).powf(k as f64 / n)
            }
            CoolingKind::Linear => self.t_max - k as f64 * (self.t_max - self.t_floor) / n,
        })
    }
}

/// Probability of moving to a proposal: 1 for improvements, otherwise
/// `exp((next - present) / T)`, which lies in (0, 1].
pub fn acceptance_probability(
    next_cost: f64,
    present_cost: f64,
    temperature: f64,
) -> Result<f64, AcceptanceError> {
    if !(next_cost.is_finite() && present_cost.is_finite() && temperature.is_finite()) {
        return Err(AcceptanceError::NonFinite);
    }
    if temperature <= 0.0 {
        return Err(AcceptanceError::NonPositiveTemperature(temperature));
    }
    if next_cost > present_cost {
        Ok(1.0)
    } else {
        Ok(((next_cost - present_cost) / temperature).exp())
    }
}

/// Bernoulli draw with probability `prob`.
pub fn accept_step(prob: f64, rng: &mut impl Rng) -> bool {
    assert!((0.0..=1.0).contains(&prob), "probability out of range: {prob}");
    rng.gen::<f64>() < prob
}

/// Why a search run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TerminalReason {
    IterationsExhausted,
    EarlyExitStall,
    EnumerationComplete,
}

impl std::fmt::Display for TerminalReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::IterationsExhausted => "iterations-exhausted",
            Self::EarlyExitStall => "early-exit-stall",
            Self::EnumerationComplete => "enumeration-complete",
        })
    }
}

/// One row of the search table. States and costs are recorded as they stood
/// when the iteration's proposal had been evaluated but not yet folded in,
/// so the best columns update on the following row. A `None` next cost
/// means the proposal failed; a `None` best means nothing has succeeded yet.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub current: Recipe,
    pub next: Recipe,
    pub best: Option<Recipe>,
    pub current_cost: Option<Score>,
    pub next_cost: Option<Score>,
    pub best_cost: Option<Score>,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchTrace {
    pub rows: Vec<TraceRow>,
    pub terminal_reason: TerminalReason,
}

/// Result of one engine run over a partition's cost callback.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: Recipe,
    pub best_cost: Score,
    pub trace: SearchTrace,
    /// Distinct recipes evaluated during the run.
    pub distinct_evaluated: usize,
    /// Distinct recipes whose evaluation failed.
    pub failures: usize,
}

/// Cost callback the engines drive. `Err` aborts the run; a `Failed`
/// outcome merely rejects the candidate. `stop_requested` is polled after
/// every evaluation.
pub trait CostEvaluator {
    fn evaluate(&mut self, recipe: &Recipe) -> Result<ScoreOutcome, CostError>;

    fn stop_requested(&self) -> bool {
        false
    }
}

impl<F> CostEvaluator for F
where
    F: FnMut(&Recipe) -> Result<ScoreOutcome, CostError>,
{
    fn evaluate(&mut self, recipe: &Recipe) -> Result<ScoreOutcome, CostError> {
        self(recipe)
    }
}

#[derive(Debug, Clone)]
pub struct AnnealerConfig {
    pub cooling: CoolingSchedule,
    pub max_iterations: usize,
    pub initial_sample_size: usize,
    pub rng_seed: u64,
    pub stall_limit: usize,
}

impl Default for AnnealerConfig {
    fn default() -> Self {
        Self {
            cooling: CoolingSchedule {
                kind: CoolingKind::Geometric,
                t_max: 100.0,
                t_floor: 1.0,
                max_iterations: 100,
            },
            max_iterations: 100,
            initial_sample_size: 20,
            rng_seed: 123,
            stall_limit: 10,
        }
    }
}

impl AnnealerConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        self.cooling.validate()?;
        if self.max_iterations < 1 {
            return Err(EngineError::Config("max_iterations must be >= 1".into()));
        }
        if self.max_iterations > self.cooling.max_iterations {
            return Err(EngineError::Config(format!(
                "loop length {} exceeds the cooling horizon {}",
                self.max_iterations, self.cooling.max_iterations
            )));
        }
        if self.stall_limit < 1 {
            return Err(EngineError::Config("stall_limit must be >= 1".into()));
        }
        Ok(())
    }
}

/// Tracks the best state seen so far; ties keep the first find so traces
/// stay stable, and failures never enter.
struct BestTracker {
    best: Option<(Recipe, Score)>,
    evaluated: HashSet<String>,
    failed: HashSet<String>,
}

impl BestTracker {
    fn new() -> Self {
        Self {
            best: None,
            evaluated: HashSet::new(),
            failed: HashSet::new(),
        }
    }

    /// Folds one evaluation in; returns true when the best improved.
    fn observe(&mut self, recipe: &Recipe, outcome: &ScoreOutcome) -> bool {
        self.evaluated.insert(recipe.to_string());
        match outcome {
            ScoreOutcome::Success(score) => match &self.best {
                Some((_, incumbent)) if score.value() <= incumbent.value() => false,
                _ => {
                    self.best = Some((recipe.clone(), *score));
                    true
                }
            },
            ScoreOutcome::Failed(_) => {
                self.failed.insert(recipe.to_string());
                false
            }
        }
    }

    fn snapshot(&self) -> (Option<Recipe>, Option<Score>) {
        match &self.best {
            Some((r, s)) => (Some(r.clone()), Some(*s)),
            None => (None, None),
        }
    }

    fn finish(
        self,
        rows: Vec<TraceRow>,
        terminal_reason: TerminalReason,
    ) -> Result<SearchOutcome, EngineError> {
        let (best, best_cost) = self.best.ok_or(EngineError::NoSuccessfulEvaluation)?;
        Ok(SearchOutcome {
            best,
            best_cost,
            trace: SearchTrace {
                rows,
                terminal_reason,
            },
            distinct_evaluated: self.evaluated.len(),
            failures: self.failed.len(),
        })
    }
}

/// Simulated annealing. Iteration 0 evaluates the canonical recipe as its
/// own proposal; before the loop, `initial_sample_size` random recipes seed
/// the best tracker (never the current state). Failed proposals are never
/// accepted and never become best. The run ends when iterations are
/// exhausted, when `stall_limit` consecutive evaluated proposals leave the
/// best unchanged, or when the evaluator requests a stop.
pub fn run_annealing(
    cfg: &AnnealerConfig,
    space: &RecipeSpace,
    cost: &mut dyn CostEvaluator,
) -> Result<SearchOutcome, EngineError> {
    cfg.validate()?;
    if space.library().is_empty() {
        return Err(EngineError::Config("subsequence library is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut tracker = BestTracker::new();
    let mut rows = Vec::new();

    for _ in 0..cfg.initial_sample_size {
        let sample = space.random(&mut rng);
        let outcome = cost.evaluate(&sample)?;
        tracker.observe(&sample, &outcome);
        if cost.stop_requested() {
            return tracker.finish(rows, TerminalReason::EarlyExitStall);
        }
    }

    let mut current = space.canonical();
    let mut current_cost: Option<Score> = None;
    let mut stall = 0usize;
    let mut terminal = TerminalReason::IterationsExhausted;

    for k in 0..cfg.max_iterations {
        let temperature = cfg
            .cooling
            .temperature_at(k)
            .map_err(|e| EngineError::Config(e.to_string()))?;
        let proposal = if k == 0 {
            current.clone()
        } else {
            space.neighbor(&current, temperature, cfg.cooling.t_max, &mut rng)
        };
        let outcome = cost.evaluate(&proposal)?;
        if k == 0 {
            // iteration 0 proposes the starting state itself, so its row
            // shows the freshly evaluated cost in both cost columns
            current_cost = outcome.score();
        }

        let (best, best_cost) = tracker.snapshot();
        rows.push(TraceRow {
            iteration: k,
            current: current.clone(),
            next: proposal.clone(),
            best,
            current_cost,
            next_cost: outcome.score(),
            best_cost,
            temperature,
        });

        match &outcome {
            ScoreOutcome::Success(score) => {
                let accepted = match current_cost {
                    None => true,
                    Some(present) => {
                        if temperature > 0.0 {
                            let p = acceptance_probability(
                                score.value(),
                                present.value(),
                                temperature,
                            )
                            .map_err(|e| EngineError::Config(e.to_string()))?;
                            accept_step(p, &mut rng)
                        } else {
                            // zero-temperature limit: greedy
                            score.value() >= present.value()
                        }
                    }
                };
                if accepted {
                    current = proposal.clone();
                    current_cost = Some(*score);
                }
                if tracker.observe(&proposal, &outcome) {
                    stall = 0;
                } else {
                    stall += 1;
                }
            }
            ScoreOutcome::Failed(_) => {
                tracker.observe(&proposal, &outcome);
                stall += 1;
            }
        }

        if cost.stop_requested() || stall >= cfg.stall_limit {
            terminal = TerminalReason::EarlyExitStall;
            break;
        }
    }

    tracker.finish(rows, terminal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossoverKind {
    SinglePoint,
    DoublePoint,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutationKind {
    FlipOne,
    SwapTwo,
}

#[derive(Debug, Clone)]
pub struct GaConfig {
    pub population_size: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub crossover: CrossoverKind,
    pub mutation: MutationKind,
    pub generations: usize,
    pub elitism: usize,
    pub tournament_size: usize,
    pub rng_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 10,
            mutation_rate: 0.05,
            crossover_rate: 0.95,
            crossover: CrossoverKind::SinglePoint,
            mutation: MutationKind::FlipOne,
            generations: 100,
            elitism: 1,
            tournament_size: 2,
            rng_seed: 123,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.population_size < 1 {
            return Err(EngineError::Config("population_size must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(EngineError::Config(format!(
                "mutation_rate {} is outside [0, 1]",
                self.mutation_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(EngineError::Config(format!(
                "crossover_rate {} is outside [0, 1]",
                self.crossover_rate
            )));
        }
        if self.elitism >= self.population_size {
            return Err(EngineError::Config(
                "elitism must be below population_size".into(),
            ));
        }
        if self.tournament_size < 1 {
            return Err(EngineError::Config("tournament_size must be >= 1".into()));
        }
        if self.generations < 1 {
            return Err(EngineError::Config("generations must be >= 1".into()));
        }
        Ok(())
    }
}

// genomes are padded to max_length with a reserved no-op gene before
// crossover and stripped after, so parents of different lengths cross
// cleanly and children never exceed the bound
fn pad(recipe: &Recipe, max_length: usize) -> Vec<Option<char>> {
    let mut out: Vec<Option<char>> = recipe.genes().iter().map(|&g| Some(g)).collect();
    out.resize(max_length, None);
    out
}

fn strip(padded: Vec<Option<char>>) -> Recipe {
    Recipe::from_genes(padded.into_iter().flatten().collect())
}

fn single_point_at(
    a: &[Option<char>],
    b: &[Option<char>],
    cut: usize,
) -> (Vec<Option<char>>, Vec<Option<char>>) {
    let mut c1 = a[..cut].to_vec();
    c1.extend_from_slice(&b[cut..]);
    let mut c2 = b[..cut].to_vec();
    c2.extend_from_slice(&a[cut..]);
    (c1, c2)
}

fn double_point_at(
    a: &[Option<char>],
    b: &[Option<char>],
    i: usize,
    j: usize,
) -> (Vec<Option<char>>, Vec<Option<char>>) {
    let mut c1 = a.to_vec();
    let mut c2 = b.to_vec();
    for pos in i..j {
        std::mem::swap(&mut c1[pos], &mut c2[pos]);
    }
    (c1, c2)
}

fn uniform_with(
    a: &[Option<char>],
    b: &[Option<char>],
    mask: &[bool],
) -> (Vec<Option<char>>, Vec<Option<char>>) {
    let mut c1 = a.to_vec();
    let mut c2 = b.to_vec();
    for (pos, &swap) in mask.iter().enumerate() {
        if swap {
            std::mem::swap(&mut c1[pos], &mut c2[pos]);
        }
    }
    (c1, c2)
}

/// Recombines two parents. Parents of different lengths are padded to the
/// space's maximum length before the cut and stripped after, so children
/// always satisfy the recipe invariants.
pub fn crossover(
    a: &Recipe,
    b: &Recipe,
    kind: CrossoverKind,
    space: &RecipeSpace,
    rng: &mut impl Rng,
) -> (Recipe, Recipe) {
    let len = space.max_length();
    if len == 0 {
        return (a.clone(), b.clone());
    }
    let pa = pad(a, len);
    let pb = pad(b, len);
    let (c1, c2) = match kind {
        CrossoverKind::SinglePoint => {
            let cut = rng.gen_range(0..=len);
            single_point_at(&pa, &pb, cut)
        }
        CrossoverKind::DoublePoint => {
            let mut i = rng.gen_range(0..=len);
            let mut j = rng.gen_range(0..=len);
            if i > j {
                std::mem::swap(&mut i, &mut j);
            }
            double_point_at(&pa, &pb, i, j)
        }
        CrossoverKind::Uniform => {
            let mask: Vec<bool> = (0..len).map(|_| rng.gen::<bool>()).collect();
            uniform_with(&pa, &pb, &mask)
        }
    };
    (strip(c1), strip(c2))
}

fn mutate(recipe: &Recipe, kind: MutationKind, space: &RecipeSpace, rng: &mut impl Rng) -> Recipe {
    match kind {
        MutationKind::FlipOne => space.flip_one(recipe, rng),
        MutationKind::SwapTwo => RecipeSpace::swap_two(recipe, rng),
    }
}

/// Genetic search. Generation zero is the canonical recipe plus random
/// fill; each later generation carries the top `elitism` individuals
/// unchanged and breeds the rest by tournament selection, crossover with
/// probability `crossover_rate` (clone otherwise), and per-child mutation
/// with probability `mutation_rate`. Failed evaluations get fitness
/// negative infinity. The trace holds one row per generation with the
/// temperature column fixed at zero.
pub fn run_ga(
    cfg: &GaConfig,
    space: &RecipeSpace,
    cost: &mut dyn CostEvaluator,
) -> Result<SearchOutcome, EngineError> {
    cfg.validate()?;
    if space.library().is_empty() {
        return Err(EngineError::Config("subsequence library is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut tracker = BestTracker::new();
    let mut rows = Vec::new();

    let mut population: Vec<Recipe> = vec![space.canonical()];
    while population.len() < cfg.population_size {
        population.push(space.random(&mut rng));
    }

    let mut terminal = TerminalReason::IterationsExhausted;
    'generations: for generation in 0..cfg.generations {
        assert_eq!(population.len(), cfg.population_size);
        let mut fitness: Vec<f64> = Vec::with_capacity(population.len());
        let mut scores: Vec<Option<Score>> = Vec::with_capacity(population.len());
        let mut stopped = false;
        for individual in &population {
            let outcome = cost.evaluate(individual)?;
            tracker.observe(individual, &outcome);
            match outcome.score() {
                Some(s) => {
                    fitness.push(s.value());
                    scores.push(Some(s));
                }
                None => {
                    fitness.push(f64::NEG_INFINITY);
                    scores.push(None);
                }
            }
            if cost.stop_requested() {
                stopped = true;
                break;
            }
        }

        // champion of the evaluated prefix; ties keep the earliest index
        let champion = fitness
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| a.partial_cmp(b).unwrap().then(ib.cmp(ia)))
            .map(|(i, _)| i);
        if let Some(ci) = champion {
            let (best, best_cost) = tracker.snapshot();
            rows.push(TraceRow {
                iteration: generation,
                current: population[ci].clone(),
                next: population[ci].clone(),
                best,
                current_cost: scores[ci],
                next_cost: scores[ci],
                best_cost,
                temperature: 0.0,
            });
        }

        if stopped {
            terminal = TerminalReason::EarlyExitStall;
            break 'generations;
        }
        if generation + 1 == cfg.generations {
            break;
        }

        // stable fitness ordering, best first
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&i, &j| fitness[j].partial_cmp(&fitness[i]).unwrap().then(i.cmp(&j)));

        let tournament = |rng: &mut ChaCha8Rng| -> usize {
            let mut winner = rng.gen_range(0..population.len());
            for _ in 1..cfg.tournament_size {
                let challenger = rng.gen_range(0..population.len());
                if fitness[challenger] > fitness[winner] {
                    winner = challenger;
                }
            }
            winner
        };

        let mut next: Vec<Recipe> = order[..cfg.elitism]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        while next.len() < cfg.population_size {
            let p1 = tournament(&mut rng);
            let p2 = tournament(&mut rng);
            let (c1, c2) = if rng.gen::<f64>() < cfg.crossover_rate {
                crossover(&population[p1], &population[p2], cfg.crossover, space, &mut rng)
            } else {
                (population[p1].clone(), population[p2].clone())
            };
            for child in [c1, c2] {
                if next.len() == cfg.population_size {
                    break;
                }
                let child = if rng.gen::<f64>() < cfg.mutation_rate {
                    mutate(&child, cfg.mutation, space, &mut rng)
                } else {
                    child
                };
                next.push(child);
            }
        }
        population = next;
    }

    tracker.finish(rows, terminal)
}
