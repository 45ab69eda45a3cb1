//! Subsequence libraries, recipes, and the recipe search space.
//!
//! A subsequence library maps single-letter identifiers to opaque pass
//! pipeline strings. A recipe is an ordered sequence of those identifiers;
//! its expansion (the per-gene pipeline texts joined by commas) is what gets
//! handed to the external optimizer. The search space over a library with
//! `n` entries and maximum recipe length `m` contains `sum(n^i, i = 0..=m)`
//! recipes, including the empty one.

use rand::Rng;
use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use thiserror::Error;

/// Default cap on how many recipes [`RecipeSpace::enumerate`] will yield.
pub const DEFAULT_ENUMERATION_CAP: u128 = 100_000;

const DEFAULT_LIBRARY: &str = include_str!("../data/default.subseq");
const PORTABLE_LIBRARY: &str = include_str!("../data/portable.subseq");

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("library `{name}` has no entries")]
    Empty { name: String },
    #[error("line {line}: identifier `{id}` is not a single letter A-Z")]
    BadIdentifier { line: usize, id: String },
    #[error("line {line}: duplicate identifier `{id}`")]
    DuplicateIdentifier { line: usize, id: char },
    #[error("line {line}: empty pipeline for identifier `{id}`")]
    EmptyPipeline { line: usize, id: char },
    #[error("line {line}: expected `ID<TAB>pipeline`")]
    MissingDelimiter { line: usize },
    #[error("pipeline for `{id}` contains a newline")]
    PipelineNewline { id: char },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
#[error("unknown gene `{gene}` at position {position}")]
pub struct UnknownGene {
    pub gene: char,
    pub position: usize,
}

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("space size overflows u128 (n = {n}, m = {m})")]
    Overflow { n: usize, m: usize },
    #[error("space size {size} exceeds the enumeration cap {cap}")]
    CapExceeded { size: u128, cap: u128 },
    #[error(transparent)]
    UnknownGene(#[from] UnknownGene),
    #[error("recipe length {len} exceeds the maximum {max}")]
    TooLong { len: usize, max: usize },
}

/// Named, ordered map from single-letter identifiers to pipeline strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsequenceLibrary {
    name: String,
    entries: Vec<(char, String)>,
    index: HashMap<char, usize>,
}

impl SubsequenceLibrary {
    pub fn new(
        name: impl Into<String>,
        entries: Vec<(char, String)>,
    ) -> Result<Self, LibraryError> {
        let name = name.into();
        let mut index = HashMap::new();
        for (line, (id, pipeline)) in entries.iter().enumerate() {
            let line = line + 1;
            if !id.is_ascii_uppercase() {
                return Err(LibraryError::BadIdentifier {
                    line,
                    id: id.to_string(),
                });
            }
            if pipeline.is_empty() {
                return Err(LibraryError::EmptyPipeline { line, id: *id });
            }
            if pipeline.contains('\n') || pipeline.contains('\r') {
                return Err(LibraryError::PipelineNewline { id: *id });
            }
            if index.insert(*id, line - 1).is_some() {
                return Err(LibraryError::DuplicateIdentifier { line, id: *id });
            }
        }
        if entries.is_empty() {
            return Err(LibraryError::Empty { name });
        }
        Ok(Self {
            name,
            entries,
            index,
        })
    }

    /// The built-in five-entry library (identifiers A-E) shipped with the
    /// tool, stored verbatim in `data/default.subseq`.
    pub fn default_table() -> Self {
        Self::parse("default", DEFAULT_LIBRARY).expect("embedded default library is valid")
    }

    /// Like [`Self::default_table`] but with vendor-specific passes removed
    /// so an unmodified upstream optimizer accepts every pipeline.
    pub fn portable() -> Self {
        Self::parse("portable", PORTABLE_LIBRARY).expect("embedded portable library is valid")
    }

    /// Parses the `ID<TAB>pipeline` file format. Lines starting with `#`
    /// and blank lines are ignored.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self, LibraryError> {
        let mut entries = Vec::new();
        let mut seen = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((id_part, pipeline)) = line.split_once('\t') else {
                return Err(LibraryError::MissingDelimiter { line: lineno });
            };
            let mut chars = id_part.chars();
            let (id, rest) = (chars.next(), chars.next());
            let id = match (id, rest) {
                (Some(c), None) if c.is_ascii_uppercase() => c,
                _ => {
                    return Err(LibraryError::BadIdentifier {
                        line: lineno,
                        id: id_part.to_string(),
                    })
                }
            };
            if seen.insert(id, lineno).is_some() {
                return Err(LibraryError::DuplicateIdentifier { line: lineno, id });
            }
            if pipeline.is_empty() {
                return Err(LibraryError::EmptyPipeline { line: lineno, id });
            }
            entries.push((id, pipeline.to_string()));
        }
        Self::new(name, entries)
    }

    pub fn from_file(path: &Path) -> Result<Self, LibraryError> {
        let text = std::fs::read_to_string(path).map_err(|source| LibraryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "library".to_string());
        Self::parse(name, &text)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Identifiers in library order.
    pub fn ids(&self) -> impl Iterator<Item = char> + '_ {
        self.entries.iter().map(|(id, _)| *id)
    }

    pub fn id_at(&self, idx: usize) -> Option<char> {
        self.entries.get(idx).map(|(id, _)| *id)
    }

    pub fn pipeline(&self, id: char) -> Option<&str> {
        self.index.get(&id).map(|&i| self.entries[i].1.as_str())
    }

    pub fn contains(&self, id: char) -> bool {
        self.index.contains_key(&id)
    }

    /// Concatenates each gene's pipeline text in order, joined by single
    /// commas. The empty recipe expands to the empty string.
    pub fn expand(&self, recipe: &Recipe) -> Result<String, UnknownGene> {
        let mut out = String::new();
        for (position, gene) in recipe.genes().iter().enumerate() {
            let Some(pipeline) = self.pipeline(*gene) else {
                return Err(UnknownGene {
                    gene: *gene,
                    position,
                });
            };
            if position > 0 {
                out.push(',');
            }
            out.push_str(pipeline);
        }
        Ok(out)
    }
}

/// Ordered sequence of subsequence identifiers; the unit the search mutates
/// and evaluates. Repetition is allowed and the empty recipe is legal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Recipe {
    genes: Vec<char>,
}

impl Recipe {
    pub fn empty() -> Self {
        Self { genes: Vec::new() }
    }

    pub fn from_genes(genes: Vec<char>) -> Self {
        Self { genes }
    }

    /// Parses a gene string such as `"ACDCD"`. Validity against a library
    /// is checked by [`RecipeSpace::validate`], not here.
    pub fn parse(s: &str) -> Self {
        Self {
            genes: s.chars().collect(),
        }
    }

    pub fn genes(&self) -> &[char] {
        &self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.genes {
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

/// Arithmetic description of a recipe space: `n` subsequences, maximum
/// recipe length `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceConfig {
    pub num_subsequences: usize,
    pub max_length: usize,
}

impl SpaceConfig {
    pub fn new(num_subsequences: usize, max_length: usize) -> Self {
        assert!(num_subsequences >= 1, "space needs at least one subsequence");
        Self {
            num_subsequences,
            max_length,
        }
    }
}

/// Exact number of recipes of length `0..=m` over `n` subsequences, i.e.
/// `sum(n^i)`. Overflow of `u128` is an error rather than a wraparound.
pub fn space_size(cfg: SpaceConfig) -> Result<u128, SpaceError> {
    let n = cfg.num_subsequences as u128;
    let overflow = || SpaceError::Overflow {
        n: cfg.num_subsequences,
        m: cfg.max_length,
    };
    let mut total: u128 = 0;
    let mut power: u128 = 1;
    for i in 0..=cfg.max_length {
        total = total.checked_add(power).ok_or_else(overflow)?;
        if i < cfg.max_length {
            power = power.checked_mul(n).ok_or_else(overflow)?;
        }
    }
    Ok(total)
}

/// A recipe space realized over a concrete library: the object the search
/// engines draw states from.
#[derive(Debug, Clone)]
pub struct RecipeSpace {
    library: SubsequenceLibrary,
    max_length: usize,
    enumeration_cap: u128,
}

impl RecipeSpace {
    pub fn new(library: SubsequenceLibrary, max_length: usize) -> Self {
        Self {
            library,
            max_length,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }

    pub fn with_enumeration_cap(mut self, cap: u128) -> Self {
        self.enumeration_cap = cap;
        self
    }

    pub fn library(&self) -> &SubsequenceLibrary {
        &self.library
    }

    pub fn max_length(&self) -> usize {
        self.max_length
    }

    pub fn config(&self) -> SpaceConfig {
        SpaceConfig::new(self.library.len(), self.max_length)
    }

    pub fn size(&self) -> Result<u128, SpaceError> {
        space_size(self.config())
    }

    pub fn validate(&self, recipe: &Recipe) -> Result<(), SpaceError> {
        if recipe.len() > self.max_length {
            return Err(SpaceError::TooLong {
                len: recipe.len(),
                max: self.max_length,
            });
        }
        for (position, gene) in recipe.genes().iter().enumerate() {
            if !self.library.contains(*gene) {
                return Err(UnknownGene {
                    gene: *gene,
                    position,
                }
                .into());
            }
        }
        Ok(())
    }

    /// Each library identifier once, in library order, truncated to the
    /// maximum length. For the default library this is `"ABCDE"`: the
    /// initial state of every search.
    pub fn canonical(&self) -> Recipe {
        Recipe::from_genes(self.library.ids().take(self.max_length).collect())
    }

    /// Length drawn uniformly from `0..=max_length`, each gene uniform over
    /// the library.
    pub fn random(&self, rng: &mut impl Rng) -> Recipe {
        let len = rng.gen_range(0..=self.max_length);
        Recipe::from_genes((0..len).map(|_| self.random_gene(rng)).collect())
    }

    fn random_gene(&self, rng: &mut impl Rng) -> char {
        let idx = rng.gen_range(0..self.library.len());
        self.library.id_at(idx).unwrap()
    }

    /// Single local edit. A non-empty recipe gets, with probability
    /// `n/(n+2)`, one uniformly chosen position replaced by a uniformly
    /// chosen identifier; with probability `1/(n+2)` each, a gene is
    /// appended (length permitting) or a uniformly chosen position is
    /// deleted, so every length in `0..=max_length` stays reachable. An
    /// empty recipe gains one random gene.
    pub fn flip_one(&self, recipe: &Recipe, rng: &mut impl Rng) -> Recipe {
        if self.max_length == 0 {
            return Recipe::empty();
        }
        if recipe.is_empty() {
            return Recipe::from_genes(vec![self.random_gene(rng)]);
        }
        let n = self.library.len();
        let mut genes = recipe.genes().to_vec();
        let draw = rng.gen_range(0..n + 2);
        if draw < n {
            let pos = rng.gen_range(0..genes.len());
            genes[pos] = self.library.id_at(draw).unwrap();
        } else if draw == n && genes.len() < self.max_length {
            genes.push(self.random_gene(rng));
        } else if draw == n + 1 {
            let pos = rng.gen_range(0..genes.len());
            genes.remove(pos);
        } else {
            // insert drawn at maximum length: fall back to a replacement
            let pos = rng.gen_range(0..genes.len());
            genes[pos] = self.random_gene(rng);
        }
        Recipe::from_genes(genes)
    }

    /// Exchanges two distinct uniformly chosen positions. Recipes shorter
    /// than two genes come back unchanged.
    pub fn swap_two(recipe: &Recipe, rng: &mut impl Rng) -> Recipe {
        let len = recipe.len();
        if len < 2 {
            return recipe.clone();
        }
        let mut genes = recipe.genes().to_vec();
        let a = rng.gen_range(0..len);
        let mut b = rng.gen_range(0..len - 1);
        if b >= a {
            b += 1;
        }
        genes.swap(a, b);
        Recipe::from_genes(genes)
    }

    /// Temperature-scaled perturbation: applies [`Self::flip_one`]
    /// `max(1, round(max_length * temperature / t_max))` times, so a
    /// proposal at full temperature approximates a fresh resample while one
    /// near zero is a single local edit.
    pub fn neighbor(
        &self,
        recipe: &Recipe,
        temperature: f64,
        t_max: f64,
        rng: &mut impl Rng,
    ) -> Recipe {
        let k = neighbor_flip_count(self.max_length, temperature, t_max);
        let mut out = recipe.clone();
        for _ in 0..k {
            out = self.flip_one(&out, rng);
        }
        out
    }

    /// Yields every recipe of length `0..=max_length` exactly once, in
    /// length-then-lexicographic order (lexicographic by library position).
    /// Errors out if the space exceeds the enumeration cap.
    pub fn enumerate(&self) -> Result<SpaceEnumeration<'_>, SpaceError> {
        let size = self.size()?;
        if size > self.enumeration_cap {
            return Err(SpaceError::CapExceeded {
                size,
                cap: self.enumeration_cap,
            });
        }
        Ok(SpaceEnumeration {
            space: self,
            length: 0,
            odometer: Vec::new(),
            done: false,
        })
    }
}

/// Number of flip-one edits a [`RecipeSpace::neighbor`] call applies.
pub fn neighbor_flip_count(max_length: usize, temperature: f64, t_max: f64) -> usize {
    let ratio = if t_max > 0.0 { temperature / t_max } else { 0.0 };
    ((max_length as f64) * ratio).round().max(1.0) as usize
}

/// Iterator over a whole recipe space; see [`RecipeSpace::enumerate`].
#[derive(Debug)]
pub struct SpaceEnumeration<'a> {
    space: &'a RecipeSpace,
    length: usize,
    odometer: Vec<usize>,
    done: bool,
}

impl Iterator for SpaceEnumeration<'_> {
    type Item = Recipe;

    fn next(&mut self) -> Option<Recipe> {
        if self.done {
            return None;
        }
        let lib = &self.space.library;
        let current = Recipe::from_genes(
            self.odometer
                .iter()
                .map(|&i| lib.id_at(i).unwrap())
                .collect(),
        );
        // advance the odometer; on wrap, grow to the next length
        let mut pos = self.length;
        loop {
            if pos == 0 {
                self.length += 1;
                if self.length > self.space.max_length {
                    self.done = true;
                } else {
                    self.odometer = vec![0; self.length];
                }
                break;
            }
            pos -= 1;
            self.odometer[pos] += 1;
            if self.odometer[pos] < lib.len() {
                break;
            }
            self.odometer[pos] = 0;
        }
        Some(current)
    }
}
