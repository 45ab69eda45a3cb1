//! Scoped static feature collection and the pipe/comma CSV dump format.
//!
//! A dump holds one module-wide row plus one row per (function, loop) pair;
//! functions without loops get a function-only row. Module columns repeat on
//! every row. Columns whose inputs sit outside the textual subset stay at
//! zero with `computed = false` and print as a bare `0`, while computed
//! ratio columns print with six decimals.

use super::loops::LoopModel;
use super::schema_data::DEFAULT_COLUMNS;
use super::{detect_loops, FunctionModel, IrModel};
use crate::cost::FeatureVector;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use thiserror::Error;

pub const KEY_HEADER: &str = "Module|Function|Callee|Caller|Loop";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureScope {
    Module,
    Function,
    CalleeCaller,
    Loop,
}

impl FeatureScope {
    fn parse(text: &str) -> Option<Self> {
        match text.to_ascii_lowercase().as_str() {
            "module" => Some(Self::Module),
            "function" => Some(Self::Function),
            "callee-caller" | "calleecaller" | "callee_caller" | "call" => {
                Some(Self::CalleeCaller)
            }
            "loop" => Some(Self::Loop),
            _ => None,
        }
    }
}

impl fmt::Display for FeatureScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Module => "module",
            Self::Function => "function",
            Self::CalleeCaller => "callee-caller",
            Self::Loop => "loop",
        })
    }
}

/// Formatting class of a column: bare integers or six-decimal ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Int,
    Float,
}

#[derive(Debug, Clone)]
pub struct FeatureColumn {
    pub name: String,
    pub scope: FeatureScope,
    pub kind: ColumnKind,
}

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("schema has no columns")]
    Empty,
    #[error("line {line}: duplicate column name `{name}`")]
    DuplicateName { line: usize, name: String },
    #[error("line {line}: unknown scope `{scope}` (expected module, function, callee-caller, or loop)")]
    UnknownScope { line: usize, scope: String },
    #[error("line {line}: unknown kind `{kind}` (expected int or float)")]
    UnknownKind { line: usize, kind: String },
    #[error("line {line}: expected `name scope [kind]`")]
    Malformed { line: usize },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Ordered, named column set; determines both the dump layout and the
/// vector layout handed to cost models.
#[derive(Debug, Clone)]
pub struct FeatureSchema {
    id: String,
    columns: Vec<FeatureColumn>,
}

impl FeatureSchema {
    /// The built-in 141-column schema.
    pub fn pfs() -> Self {
        Self {
            id: "pfs-141".to_string(),
            columns: DEFAULT_COLUMNS
                .iter()
                .map(|&(name, scope, kind)| FeatureColumn {
                    name: name.to_string(),
                    scope,
                    kind,
                })
                .collect(),
        }
    }

    pub fn new(id: impl Into<String>, columns: Vec<FeatureColumn>) -> Result<Self, SchemaError> {
        if columns.is_empty() {
            return Err(SchemaError::Empty);
        }
        let mut seen = HashSet::new();
        for (i, col) in columns.iter().enumerate() {
            if !seen.insert(col.name.as_str()) {
                return Err(SchemaError::DuplicateName {
                    line: i + 1,
                    name: col.name.clone(),
                });
            }
        }
        Ok(Self {
            id: id.into(),
            columns,
        })
    }

    /// Loads an override schema: one `name scope [kind]` per line, `#`
    /// comments ignored. The kind defaults to `float`, suiting third-party
    /// embedding vectors.
    pub fn from_file(path: &Path) -> Result<Self, SchemaError> {
        let text = std::fs::read_to_string(path).map_err(|source| SchemaError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "schema".to_string());
        Self::parse(id, &text)
    }

    pub fn parse(id: impl Into<String>, text: &str) -> Result<Self, SchemaError> {
        let mut columns = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(name), Some(scope)) = (parts.next(), parts.next()) else {
                return Err(SchemaError::Malformed { line: lineno });
            };
            let scope = FeatureScope::parse(scope).ok_or_else(|| SchemaError::UnknownScope {
                line: lineno,
                scope: scope.to_string(),
            })?;
            let kind = match parts.next() {
                None => ColumnKind::Float,
                Some("int") => ColumnKind::Int,
                Some("float") => ColumnKind::Float,
                Some(other) => {
                    return Err(SchemaError::UnknownKind {
                        line: lineno,
                        kind: other.to_string(),
                    })
                }
            };
            columns.push(FeatureColumn {
                name: name.to_string(),
                scope,
                kind,
            });
        }
        Self::new(id, columns)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    /// The full dump header line (scope-key header plus column names).
    pub fn header_line(&self) -> String {
        let mut out = String::from(KEY_HEADER);
        for name in self.names() {
            out.push(',');
            out.push_str(name);
        }
        out
    }
}

/// Pipe-joined row key; empty components mark inapplicable scopes, so a
/// module row renders as `name||||`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScopeKey {
    pub module: String,
    pub function: String,
    pub callee: String,
    pub caller: String,
    pub loop_label: String,
}

impl ScopeKey {
    pub fn module(module: impl Into<String>) -> Self {
        Self {
            module: module.into(),
            ..Self::default()
        }
    }

    pub fn function(module: impl Into<String>, function: impl Into<String>) -> Self {
        Self {
            module: module.into(),
            function: function.into(),
            ..Self::default()
        }
    }

    pub fn for_loop(
        module: impl Into<String>,
        function: impl Into<String>,
        loop_label: impl Into<String>,
    ) -> Self {
        Self {
            module: module.into(),
            function: function.into(),
            loop_label: loop_label.into(),
            ..Self::default()
        }
    }
}

impl fmt::Display for ScopeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}|{}|{}|{}|{}",
            self.module, self.function, self.callee, self.caller, self.loop_label
        )
    }
}

/// One dump row: a scope key, the value vector, and a per-column flag
/// separating computed zeros from not-computed zeros.
#[derive(Debug, Clone)]
pub struct FeatureRow {
    pub key: ScopeKey,
    pub values: FeatureVector,
    pub computed: Vec<bool>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CollectorStats {
    /// Instruction visits performed; bounded by one visit per scope group.
    pub instruction_visits: usize,
}

#[derive(Debug, Default, Clone, Copy)]
struct BlockStats {
    insts: usize,
    loads: usize,
    stores: usize,
    calls: usize,
}

impl BlockStats {
    fn add(&mut self, other: &BlockStats) {
        self.insts += other.insts;
        self.loads += other.loads;
        self.stores += other.stores;
        self.calls += other.calls;
    }
}

pub fn collect_features(model: &IrModel, schema: &FeatureSchema) -> Vec<FeatureRow> {
    collect_features_with_stats(model, schema).0
}

pub fn collect_features_with_stats(
    model: &IrModel,
    schema: &FeatureSchema,
) -> (Vec<FeatureRow>, CollectorStats) {
    let mut stats = CollectorStats::default();

    // single instruction traversal: per-block counters feed every scope group
    let mut block_stats: Vec<Vec<BlockStats>> = Vec::with_capacity(model.functions.len());
    for function in &model.functions {
        let mut per_block = Vec::with_capacity(function.blocks.len());
        for block in &function.blocks {
            let mut bs = BlockStats::default();
            for inst in &block.instructions {
                stats.instruction_visits += 1;
                bs.insts += 1;
                bs.loads += inst.is_load as usize;
                bs.stores += inst.is_store as usize;
                bs.calls += inst.is_call as usize;
            }
            per_block.push(bs);
        }
        block_stats.push(per_block);
    }

    let loops_per_fn: Vec<Vec<LoopModel>> = model.functions.iter().map(detect_loops).collect();
    let module_map = module_feature_map(model, &block_stats, &loops_per_fn);

    let mut rows = Vec::new();
    rows.push(assemble_row(
        schema,
        ScopeKey::module(&model.module_name),
        &module_map,
        None,
    ));

    for (fi, function) in model.functions.iter().enumerate() {
        let loops = &loops_per_fn[fi];
        if loops.is_empty() {
            rows.push(assemble_row(
                schema,
                ScopeKey::function(&model.module_name, &function.name),
                &module_map,
                None,
            ));
            continue;
        }
        for (li, l) in loops.iter().enumerate() {
            let loop_map = loop_feature_map(function, &block_stats[fi], loops, li);
            rows.push(assemble_row(
                schema,
                ScopeKey::for_loop(&model.module_name, &function.name, &l.header),
                &module_map,
                Some(&loop_map),
            ));
        }
    }

    (rows, stats)
}

type ValueMap = HashMap<&'static str, f64>;

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn module_feature_map(
    model: &IrModel,
    block_stats: &[Vec<BlockStats>],
    loops_per_fn: &[Vec<LoopModel>],
) -> ValueMap {
    let fn_count = model.functions.len();
    let mut totals = BlockStats::default();
    let mut total_blocks = 0usize;
    let mut total_edges = 0usize;
    let mut critical_edges = 0usize;
    let mut calls_per_fn = Vec::with_capacity(fn_count);
    for (fi, function) in model.functions.iter().enumerate() {
        let mut fn_totals = BlockStats::default();
        for bs in &block_stats[fi] {
            fn_totals.add(bs);
        }
        calls_per_fn.push(fn_totals.calls);
        totals.add(&fn_totals);
        total_blocks += function.blocks.len();
        total_edges += function.edges.len();
        critical_edges += count_critical_edges(function);
    }
    let total_loops: usize = loops_per_fn.iter().map(|l| l.len()).sum();

    let defined: HashSet<&str> = model.functions.iter().map(|f| f.name.as_str()).collect();
    let mut callgraph_edges: HashSet<(&str, &str)> = HashSet::new();
    for function in &model.functions {
        for call in &function.calls {
            if defined.contains(call.callee.as_str()) {
                callgraph_edges.insert((function.name.as_str(), call.callee.as_str()));
            }
        }
    }

    let median_calls = {
        let mut sorted = calls_per_fn.clone();
        sorted.sort_unstable();
        if sorted.is_empty() {
            0
        } else {
            sorted[(sorted.len() - 1) / 2]
        }
    };

    let mut map = ValueMap::new();
    map.insert(
        "average-store-instructions-per-function",
        ratio(totals.stores, fn_count),
    );
    map.insert(
        "average-load-instructions-per-function",
        ratio(totals.loads, fn_count),
    );
    map.insert(
        "average-instructions-per-function",
        ratio(totals.insts, fn_count),
    );
    map.insert("global-variable-count", model.globals.len() as f64);
    map.insert("critical-edge-count", critical_edges as f64);
    map.insert("total-edge-count", total_edges as f64);
    map.insert("loop-count", total_loops as f64);
    map.insert("median-calls-per-function", median_calls as f64);
    map.insert("average-calls-per-function", ratio(totals.calls, fn_count));
    map.insert("total-function-calls", totals.calls as f64);
    map.insert("total-instruction-count", totals.insts as f64);
    map.insert("average-bb-per-function", ratio(total_blocks, fn_count));
    map.insert("total-bb-count", total_blocks as f64);
    map.insert("function-count", fn_count as f64);
    map.insert("node-count", fn_count as f64);
    map.insert("edge-count", callgraph_edges.len() as f64);
    map
}

fn count_critical_edges(function: &FunctionModel) -> usize {
    let mut succ_count: HashMap<&str, usize> = HashMap::new();
    let mut pred_count: HashMap<&str, usize> = HashMap::new();
    for (from, to) in &function.edges {
        *succ_count.entry(from.as_str()).or_default() += 1;
        *pred_count.entry(to.as_str()).or_default() += 1;
    }
    function
        .edges
        .iter()
        .filter(|(from, to)| {
            succ_count.get(from.as_str()).copied().unwrap_or(0) > 1
                && pred_count.get(to.as_str()).copied().unwrap_or(0) > 1
        })
        .count()
}

fn loop_feature_map(
    function: &FunctionModel,
    block_stats: &[BlockStats],
    loops: &[LoopModel],
    li: usize,
) -> ValueMap {
    let l = &loops[li];
    let stats_for = |labels: &BTreeSet<String>| {
        let mut acc = BlockStats::default();
        for (bi, block) in function.blocks.iter().enumerate() {
            if labels.contains(&block.label) {
                acc.add(&block_stats[bi]);
            }
        }
        acc
    };

    let children: Vec<&LoopModel> = loops
        .iter()
        .enumerate()
        .filter(|(i, m)| m.parent == Some(li) && *i != li)
        .map(|(_, m)| m)
        .collect();
    let mut exclusive = l.blocks.clone();
    for child in &children {
        for b in &child.blocks {
            exclusive.remove(b);
        }
    }

    let inclusive_stats = stats_for(&l.blocks);
    let exclusive_stats = stats_for(&exclusive);

    let descendants_max_depth = loops
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let mut cur = *i;
            loop {
                match loops[cur].parent {
                    Some(p) if p == li => break true,
                    Some(p) => cur = p,
                    None => break false,
                }
            }
        })
        .map(|(_, m)| m.depth)
        .max()
        .unwrap_or(l.depth);

    let child_inst_counts: Vec<usize> = children
        .iter()
        .map(|c| stats_for(&c.blocks).insts)
        .collect();
    let avg_child_insts = ratio(child_inst_counts.iter().sum(), child_inst_counts.len());

    let mut map = ValueMap::new();
    map.insert("IsFixedTripCount", l.trip_count.is_some() as u8 as f64);
    map.insert("MaxLoopHeight", (descendants_max_depth - l.depth) as f64);
    map.insert("IsOuterMostLoop", l.parent.is_none() as u8 as f64);
    map.insert("IsInnerMostLoop", children.is_empty() as u8 as f64);
    map.insert("TotBlocksPerLoop", l.blocks.len() as f64);
    map.insert(
        "AvgNumLoadInstPerLoop",
        ratio(exclusive_stats.loads, exclusive_stats.insts),
    );
    map.insert("TotLoopInstCount", exclusive_stats.insts as f64);
    map.insert("NumStoreInstPerLoop", exclusive_stats.stores as f64);
    map.insert("NumLoadInstPerLoop", exclusive_stats.loads as f64);
    map.insert(
        "AvgNumLoadInstPerLoopNest",
        ratio(inclusive_stats.loads, inclusive_stats.insts),
    );
    map.insert("TotLoopNestInstCount", inclusive_stats.insts as f64);
    map.insert("NumStoreInstPerLoopNest", inclusive_stats.stores as f64);
    map.insert("NumLoadInstPerLoopNest", inclusive_stats.loads as f64);
    map.insert("AvgNumInsts", avg_child_insts);
    map.insert("IndVarSetSize", l.induction_phis as f64);
    map.insert("Size", inclusive_stats.insts as f64);
    if let Some(trips) = l.trip_count {
        map.insert("TripCount", trips as f64);
        map.insert("MaxTripCount", trips as f64);
    }
    if let Some(iv) = &l.iv {
        map.insert("StepValueInt", iv.step as f64);
        map.insert("InitialIVValueInt", iv.init as f64);
        map.insert("FinalIVValueInt", iv.bound as f64);
    }
    map
}

fn assemble_row(
    schema: &FeatureSchema,
    key: ScopeKey,
    module_map: &ValueMap,
    loop_map: Option<&ValueMap>,
) -> FeatureRow {
    let mut values = Vec::with_capacity(schema.len());
    let mut computed = Vec::with_capacity(schema.len());
    for col in schema.columns() {
        let looked_up = match col.scope {
            FeatureScope::Module => module_map.get(col.name.as_str()),
            FeatureScope::Loop => loop_map.and_then(|m| m.get(col.name.as_str())),
            _ => None,
        };
        match looked_up {
            Some(&v) => {
                values.push(v);
                computed.push(true);
            }
            None => {
                values.push(0.0);
                computed.push(false);
            }
        }
    }
    FeatureRow {
        key,
        values: FeatureVector::new(schema.id(), values).expect("collected features are finite"),
        computed,
    }
}

fn format_value(value: f64, kind: ColumnKind, computed: bool) -> String {
    if !computed {
        return "0".to_string();
    }
    match kind {
        ColumnKind::Float => format!("{value:.6}"),
        ColumnKind::Int => format!("{}", value.round() as i64),
    }
}

/// Renders rows in the dump format: a header line, then one line per row of
/// pipe-joined scope key followed by comma-joined values. Lines are
/// newline-terminated.
pub fn dump_features_csv(rows: &[FeatureRow], schema: &FeatureSchema) -> String {
    let mut out = schema.header_line();
    out.push('\n');
    for row in rows {
        out.push_str(&row.key.to_string());
        for (i, col) in schema.columns().iter().enumerate() {
            out.push(',');
            out.push_str(&format_value(row.values.values()[i], col.kind, row.computed[i]));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("line 1: header does not match schema `{schema}`")]
    HeaderMismatch { schema: String },
    #[error("line {line}: expected {expected} values, found {found}")]
    ValueCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: scope key needs 5 pipe-separated components")]
    BadKey { line: usize },
    #[error("line {line}: unparseable value `{value}`")]
    BadValue { line: usize, value: String },
    #[error("input is empty")]
    EmptyInput,
}

/// Parses a dump produced by [`dump_features_csv`] back into rows. A bare
/// `0` in a float column is read as not-computed, so dump -> parse -> dump
/// is byte-identical.
pub fn parse_features_csv(text: &str, schema: &FeatureSchema) -> Result<Vec<FeatureRow>, CsvError> {
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(CsvError::EmptyInput);
    };
    if header != schema.header_line() {
        return Err(CsvError::HeaderMismatch {
            schema: schema.id().to_string(),
        });
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let key_text = parts.next().unwrap_or("");
        let components: Vec<&str> = key_text.split('|').collect();
        if components.len() != 5 {
            return Err(CsvError::BadKey { line: lineno });
        }
        let key = ScopeKey {
            module: components[0].to_string(),
            function: components[1].to_string(),
            callee: components[2].to_string(),
            caller: components[3].to_string(),
            loop_label: components[4].to_string(),
        };
        let tokens: Vec<&str> = parts.collect();
        if tokens.len() != schema.len() {
            return Err(CsvError::ValueCount {
                line: lineno,
                expected: schema.len(),
                found: tokens.len(),
            });
        }
        let mut values = Vec::with_capacity(schema.len());
        let mut computed = Vec::with_capacity(schema.len());
        for (token, col) in tokens.iter().zip(schema.columns()) {
            let value: f64 = token.parse().map_err(|_| CsvError::BadValue {
                line: lineno,
                value: token.to_string(),
            })?;
            values.push(value);
            computed.push(match col.kind {
                ColumnKind::Float => token.contains('.'),
                ColumnKind::Int => true,
            });
        }
        rows.push(FeatureRow {
            key,
            values: FeatureVector::new(schema.id(), values)
                .map_err(|_| CsvError::BadValue {
                    line: lineno,
                    value: "non-finite".to_string(),
                })?,
            computed,
        });
    }
    Ok(rows)
}
