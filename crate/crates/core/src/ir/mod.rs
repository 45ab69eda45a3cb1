//! Textual-IR subset parser and the scoped static feature set.
//!
//! The parser recognizes `define`-opened functions, labelled basic blocks,
//! one instruction per line, `br`/`ret`/`switch` terminators, and
//! module-level global declarations. Anything else inside a function body
//! counts as a generic instruction; only unbalanced function braces and
//! duplicate block labels are fatal. The structural model feeds loop
//! detection ([`detect_loops`]) and feature collection
//! ([`collect_features`]).

mod features;
mod loops;
mod schema_data;

pub use features::{
    collect_features, collect_features_with_stats, dump_features_csv, parse_features_csv,
    CollectorStats, ColumnKind, CsvError, FeatureColumn, FeatureRow, FeatureSchema, FeatureScope,
    SchemaError, ScopeKey,
};
pub use loops::{detect_loops, LoopAnalysis, LoopModel};

use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

/// Structural model of one IR module.
#[derive(Debug, Clone)]
pub struct IrModel {
    pub module_name: String,
    pub globals: Vec<GlobalVar>,
    pub functions: Vec<FunctionModel>,
}

#[derive(Debug, Clone)]
pub struct GlobalVar {
    pub name: String,
}

#[derive(Debug, Clone)]
pub struct FunctionModel {
    pub name: String,
    pub blocks: Vec<BasicBlock>,
    /// Distinct CFG edges as (from-label, to-label), in block order.
    pub edges: Vec<(String, String)>,
    pub calls: Vec<CallSite>,
}

#[derive(Debug, Clone)]
pub struct BasicBlock {
    pub label: String,
    pub instructions: Vec<InstructionRecord>,
}

#[derive(Debug, Clone)]
pub struct CallSite {
    pub callee: String,
    pub in_loop: bool,
}

#[derive(Debug, Clone)]
pub struct InstructionRecord {
    pub opcode: String,
    pub is_load: bool,
    pub is_store: bool,
    pub is_call: bool,
    pub is_branch: bool,
    pub is_vector: bool,
    pub operands: usize,
    pub(crate) detail: Option<InstDetail>,
}

/// Extra structure kept only for the instructions the induction-variable
/// recognizer needs.
#[derive(Debug, Clone)]
pub(crate) enum InstDetail {
    Phi {
        dest: String,
        incoming: Vec<(String, String)>, // (value, predecessor label)
    },
    IntBinOp {
        dest: String,
        negated: bool, // true for sub
        lhs: String,
        rhs: String,
    },
    Icmp {
        pred: String,
        lhs: String,
        rhs: String,
    },
}

impl FunctionModel {
    pub fn block(&self, label: &str) -> Option<&BasicBlock> {
        self.blocks.iter().find(|b| b.label == label)
    }

    pub fn entry(&self) -> Option<&BasicBlock> {
        self.blocks.first()
    }
}

impl IrModel {
    pub fn total_instructions(&self) -> usize {
        self.functions
            .iter()
            .map(|f| f.blocks.iter().map(|b| b.instructions.len()).sum::<usize>())
            .sum()
    }

    pub fn total_blocks(&self) -> usize {
        self.functions.iter().map(|f| f.blocks.len()).sum()
    }
}

/// Stable digest of IR text with line endings normalized, used to decide
/// whether a transformation changed anything. Equal bytes always hash equal;
/// CRLF and LF variants of the same file hash equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint(String);

impl Fingerprint {
    pub fn as_hex(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn ir_fingerprint(bytes: &[u8]) -> Fingerprint {
    let mut hasher = Sha256::new();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'\r' => {
                hasher.update(*b"\n");
                if i + 1 < bytes.len() && bytes[i + 1] == b'\n' {
                    i += 1;
                }
            }
            b => hasher.update([b]),
        }
        i += 1;
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    Fingerprint(hex)
}

pub fn fingerprint_file(path: &Path) -> std::io::Result<Fingerprint> {
    Ok(ir_fingerprint(&std::fs::read(path)?))
}

/// Parses IR text; the module name is taken from a `source_filename` line
/// when present.
pub fn parse_ir(text: &str) -> Result<IrModel, ParseError> {
    parse_ir_impl(text, None)
}

/// Parses IR text under an explicit module name (callers usually pass the
/// file name).
pub fn parse_ir_named(text: &str, module_name: impl Into<String>) -> Result<IrModel, ParseError> {
    parse_ir_impl(text, Some(module_name.into()))
}

const SYNTHETIC_ENTRY: &str = "<entry>";

struct FunctionBuilder {
    name: String,
    define_line: usize,
    blocks: Vec<BasicBlock>,
    block_lines: HashMap<String, usize>,
    current: Option<BasicBlock>,
    succs: Vec<(String, Vec<String>)>, // (block label, raw targets)
    calls: Vec<(String, String)>,      // (callee, block label)
    in_switch: bool,
}

impl FunctionBuilder {
    fn new(name: String, define_line: usize) -> Self {
        Self {
            name,
            define_line,
            blocks: Vec::new(),
            block_lines: HashMap::new(),
            current: None,
            succs: Vec::new(),
            calls: Vec::new(),
            in_switch: false,
        }
    }

    fn open_block(&mut self, label: String, line: usize) -> Result<(), ParseError> {
        self.seal_block();
        if self.block_lines.insert(label.clone(), line).is_some() {
            return Err(ParseError::new(
                line,
                format!("duplicate block label `{label}` in @{}", self.name),
            ));
        }
        self.current = Some(BasicBlock {
            label,
            instructions: Vec::new(),
        });
        Ok(())
    }

    fn seal_block(&mut self) {
        if let Some(block) = self.current.take() {
            self.blocks.push(block);
        }
    }

    fn block_for_instruction(&mut self, line: usize) -> Result<&mut BasicBlock, ParseError> {
        if self.current.is_none() {
            // instructions before any label form the entry block
            self.open_block(SYNTHETIC_ENTRY.to_string(), line)?;
        }
        Ok(self.current.as_mut().unwrap())
    }

    fn add_successors(&mut self, targets: Vec<String>) {
        let label = self
            .current
            .as_ref()
            .map(|b| b.label.clone())
            .unwrap_or_else(|| SYNTHETIC_ENTRY.to_string());
        match self.succs.iter_mut().find(|(l, _)| *l == label) {
            Some((_, existing)) => existing.extend(targets),
            None => self.succs.push((label, targets)),
        }
    }

    fn finish(mut self) -> FunctionModel {
        self.seal_block();
        let labels: std::collections::HashSet<&str> =
            self.blocks.iter().map(|b| b.label.as_str()).collect();
        let mut edges = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (from, targets) in &self.succs {
            for to in targets {
                // drop edges whose target label never materialized
                if labels.contains(to.as_str()) && seen.insert((from.clone(), to.clone())) {
                    edges.push((from.clone(), to.clone()));
                }
            }
        }
        let mut function = FunctionModel {
            name: self.name,
            blocks: self.blocks,
            edges,
            calls: Vec::new(),
        };
        let loops = loops::detect_loops(&function);
        let in_any_loop = |label: &str| loops.iter().any(|l| l.blocks.contains(label));
        function.calls = self
            .calls
            .iter()
            .map(|(callee, block)| CallSite {
                callee: callee.clone(),
                in_loop: in_any_loop(block),
            })
            .collect();
        function
    }
}

fn parse_ir_impl(text: &str, name_override: Option<String>) -> Result<IrModel, ParseError> {
    let mut module_name = name_override;
    let mut globals = Vec::new();
    let mut functions: Vec<FunctionModel> = Vec::new();
    let mut function_lines: HashMap<String, usize> = HashMap::new();
    let mut builder: Option<FunctionBuilder> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let stripped = strip_comment(raw);
        let line = stripped.trim();
        if line.is_empty() {
            continue;
        }

        match &mut builder {
            None => {
                if let Some(rest) = line.strip_prefix("source_filename") {
                    if module_name.is_none() {
                        if let Some(name) = parse_quoted(rest) {
                            module_name = Some(name);
                        }
                    }
                } else if line.starts_with("define") {
                    let name = parse_function_name(line)
                        .ok_or_else(|| ParseError::new(lineno, "malformed define line"))?;
                    if !line.trim_end().ends_with('{') {
                        return Err(ParseError::new(
                            lineno,
                            format!("define for @{name} is missing an opening brace"),
                        ));
                    }
                    if function_lines.insert(name.clone(), lineno).is_some() {
                        return Err(ParseError::new(
                            lineno,
                            format!("duplicate function name @{name}"),
                        ));
                    }
                    builder = Some(FunctionBuilder::new(name, lineno));
                } else if line.starts_with('@') && is_global_decl(line) {
                    if let Some(name) = parse_global_name(line) {
                        globals.push(GlobalVar { name });
                    }
                } else if line == "}" {
                    return Err(ParseError::new(lineno, "unmatched closing brace"));
                }
                // declares, metadata, attributes, targets: ignored
            }
            Some(b) => {
                if line == "}" {
                    let finished = builder.take().unwrap().finish();
                    functions.push(finished);
                } else if b.in_switch {
                    b.add_successors(branch_targets(line));
                    if line.contains(']') {
                        b.in_switch = false;
                    }
                } else if let Some(label) = parse_block_label(line) {
                    b.open_block(label, lineno)?;
                } else {
                    let (record, targets, callee, opens_switch) = parse_instruction(line);
                    if let Some(callee) = callee {
                        let block = b
                            .current
                            .as_ref()
                            .map(|blk| blk.label.clone())
                            .unwrap_or_else(|| SYNTHETIC_ENTRY.to_string());
                        b.calls.push((callee, block));
                    }
                    b.block_for_instruction(lineno)?.instructions.push(record);
                    if !targets.is_empty() {
                        b.add_successors(targets);
                    }
                    if opens_switch {
                        b.in_switch = true;
                    }
                }
            }
        }
    }

    if let Some(b) = builder {
        return Err(ParseError::new(
            b.define_line,
            format!("function @{} is never closed", b.name),
        ));
    }

    Ok(IrModel {
        module_name: module_name.unwrap_or_else(|| "module".to_string()),
        globals,
        functions,
    })
}

/// Truncates at the first `;` that is not inside a double-quoted string.
fn strip_comment(line: &str) -> &str {
    let mut in_string = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_string = !in_string,
            ';' if !in_string => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_quoted(text: &str) -> Option<String> {
    let start = text.find('"')?;
    let rest = &text[start + 1..];
    let end = rest.find('"')?;
    Some(rest[..end].to_string())
}

fn is_global_decl(line: &str) -> bool {
    let Some(eq) = line.find('=') else {
        return false;
    };
    let rhs = &line[eq + 1..];
    rhs.split_whitespace()
        .any(|tok| tok == "global" || tok == "constant")
}

fn parse_global_name(line: &str) -> Option<String> {
    let rest = line.strip_prefix('@')?;
    if let Some(quoted) = rest.strip_prefix('"') {
        let end = quoted.find('"')?;
        return Some(quoted[..end].to_string());
    }
    let end = rest
        .find(|c: char| c.is_whitespace() || c == '=')
        .unwrap_or(rest.len());
    Some(rest[..end].to_string())
}

fn parse_function_name(line: &str) -> Option<String> {
    let at = line.find('@')?;
    let rest = &line[at + 1..];
    if let Some(quoted) = rest.strip_prefix('"') {
        let end = quoted.find('"')?;
        return Some(quoted[..end].to_string());
    }
    let end = rest
        .find(|c: char| c == '(' || c.is_whitespace())
        .unwrap_or(rest.len());
    Some(rest[..end].to_string())
}

fn is_label_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '$' | '-')
}

/// A block label line: `name:`, `%name:`, `"quoted name":`, or `42:`,
/// with nothing else after the colon (comments were stripped already).
fn parse_block_label(line: &str) -> Option<String> {
    let body = line.strip_suffix(':')?;
    let body = body.strip_prefix('%').unwrap_or(body);
    if let Some(q) = body.strip_prefix('"') {
        let inner = q.strip_suffix('"')?;
        return Some(inner.to_string());
    }
    if !body.is_empty() && body.chars().all(is_label_char) {
        return Some(body.to_string());
    }
    None
}

fn has_vector_type(body: &str) -> bool {
    // a `<N x ...>` type anywhere in the line
    let bytes = body.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b != b'<' {
            continue;
        }
        let mut j = i + 1;
        while j < bytes.len() && bytes[j] == b' ' {
            j += 1;
        }
        let digits_start = j;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        if j == digits_start {
            continue;
        }
        while j < bytes.len() && bytes[j] == b' ' {
            j += 1;
        }
        if j < bytes.len() && bytes[j] == b'x' {
            return true;
        }
    }
    false
}

fn count_operands(body: &str) -> usize {
    let mut count = 0;
    let mut prev_is_delim = true;
    for c in body.chars() {
        let is_delim = c.is_whitespace() || matches!(c, ',' | '(' | ')' | '[' | ']' | '{' | '}');
        if prev_is_delim && (c == '%' || c == '@') {
            count += 1;
        }
        prev_is_delim = is_delim;
    }
    count
}

/// `br label %x` / `br i1 %c, label %t, label %f` / switch case lines:
/// every `label %target` pair names a successor.
fn branch_targets(body: &str) -> Vec<String> {
    let mut targets = Vec::new();
    let tokens: Vec<&str> = body
        .split(|c: char| c.is_whitespace() || c == ',' || c == '[' || c == ']')
        .filter(|t| !t.is_empty())
        .collect();
    for pair in tokens.windows(2) {
        if pair[0] == "label" {
            if let Some(t) = pair[1].strip_prefix('%') {
                targets.push(t.to_string());
            }
        }
    }
    targets
}

fn parse_instruction(line: &str) -> (InstructionRecord, Vec<String>, Option<String>, bool) {
    // optional `%result =` prefix
    let (dest, body) = match line.strip_prefix('%') {
        Some(rest) => match rest.split_once('=') {
            Some((name, body)) if !name.trim().is_empty() => {
                (Some(format!("%{}", name.trim())), body.trim())
            }
            _ => (None, line),
        },
        None => (None, line),
    };

    let mut tokens = body.split_whitespace();
    let mut opcode = tokens.next().unwrap_or("").to_string();
    // `tail call`, `musttail call`, `notail call`
    if matches!(opcode.as_str(), "tail" | "musttail" | "notail") {
        if let Some(next) = tokens.next() {
            opcode = next.to_string();
        }
    }

    let is_load = opcode == "load";
    let is_store = opcode == "store";
    let is_call = matches!(opcode.as_str(), "call" | "invoke" | "callbr");
    let is_branch = matches!(opcode.as_str(), "br" | "switch");
    let is_vector = opcode.starts_with('v') || has_vector_type(body);

    let mut targets = Vec::new();
    let mut callee = None;
    let mut opens_switch = false;
    if is_branch {
        targets = branch_targets(body);
        if opcode == "switch" && !body.contains(']') {
            opens_switch = true;
        }
    } else if is_call {
        callee = extract_callee(body);
    }

    let detail = parse_detail(&opcode, dest.as_deref(), body);

    (
        InstructionRecord {
            opcode,
            is_load,
            is_store,
            is_call,
            is_branch,
            is_vector,
            operands: count_operands(body),
            detail,
        },
        targets,
        callee,
        opens_switch,
    )
}

fn extract_callee(body: &str) -> Option<String> {
    // the called symbol is the `@name` token whose identifier runs straight
    // into the argument list's opening parenthesis
    for (at, _) in body.match_indices('@') {
        let rest = &body[at + 1..];
        if let Some(quoted) = rest.strip_prefix('"') {
            let Some(end) = quoted.find('"') else { continue };
            if quoted[end + 1..].starts_with('(') {
                return Some(quoted[..end].to_string());
            }
            continue;
        }
        let end = rest
            .find(|c: char| !(is_label_char(c)))
            .unwrap_or(rest.len());
        if end > 0 && rest[end..].starts_with('(') {
            return Some(rest[..end].to_string());
        }
    }
    None
}

fn parse_detail(opcode: &str, dest: Option<&str>, body: &str) -> Option<InstDetail> {
    match opcode {
        "phi" => {
            let dest = dest?.to_string();
            let mut incoming = Vec::new();
            let mut rest = body;
            while let Some(open) = rest.find('[') {
                let tail = &rest[open + 1..];
                let close = tail.find(']')?;
                let inner = &tail[..close];
                if let Some((value, label)) = inner.split_once(',') {
                    let label = label.trim().strip_prefix('%').unwrap_or(label.trim());
                    incoming.push((value.trim().to_string(), label.to_string()));
                }
                rest = &tail[close + 1..];
            }
            Some(InstDetail::Phi { dest, incoming })
        }
        "add" | "sub" => {
            let dest = dest?.to_string();
            let (left, right) = body.split_once(',')?;
            let lhs = left.split_whitespace().last()?.to_string();
            let rhs = right.split_whitespace().next()?.to_string();
            Some(InstDetail::IntBinOp {
                dest,
                negated: opcode == "sub",
                lhs,
                rhs,
            })
        }
        "icmp" => {
            let after = body.strip_prefix("icmp")?.trim_start();
            let mut toks = after.split_whitespace();
            let pred = toks.next()?.to_string();
            let (left, right) = after.split_once(',')?;
            let lhs = left.split_whitespace().last()?.to_string();
            let rhs = right.split_whitespace().next()?.to_string();
            Some(InstDetail::Icmp { pred, lhs, rhs })
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOOP_WRAP: &str = r#"
source_filename = "loop-wrap.c"

@.str = private unnamed_addr constant [15 x i8] c"_finfo_dataset\00"
@.str.1 = private unnamed_addr constant [3 x i8] c"rt\00"
@stderr = external global ptr
@.str.2 = private unnamed_addr constant [29 x i8] c"\0AError: Can't find dataset!\00"
@.str.3 = private unnamed_addr constant [5 x i8] c"%ld\0A\00"

define i32 @main(i32 %argc, ptr %argv) {
entry:
  %file = call ptr @fopen(ptr @.str, ptr @.str.1)
  %isnull = icmp eq ptr %file, null
  br i1 %isnull, label %if.then, label %if.end

if.then:                                          ; preds = %entry
  %err = load ptr, ptr @stderr
  %c = call i32 @fprintf(ptr %err, ptr @.str.2)
  br label %return

if.end:                                           ; preds = %entry
  %n = call i64 @fscanf(ptr %file, ptr @.str.3)
  %cl = call i32 @fclose(ptr %file)
  br label %for.cond

for.cond:                                         ; preds = %for.inc, %if.end
  %i = phi i64 [ 0, %if.end ], [ %inc, %for.inc ]
  %cmp = icmp slt i64 %i, %n
  br i1 %cmp, label %for.body, label %for.end

for.body:                                         ; preds = %for.cond
  call void @main1(i32 %argc, ptr %argv)
  br label %for.inc

for.inc:                                          ; preds = %for.body
  %inc = add nsw i64 %i, 1
  br label %for.cond

for.end:                                          ; preds = %for.cond
  br label %return

return:                                           ; preds = %for.end, %if.then
  ret i32 0
}

declare ptr @fopen(ptr, ptr)
declare i32 @fprintf(ptr, ptr)
declare i64 @fscanf(ptr, ptr)
declare i32 @fclose(ptr)
declare void @main1(i32, ptr)
"#;

    #[test]
    fn empty_input_parses_to_empty_model() {
        let m = parse_ir("").unwrap();
        assert_eq!(m.functions.len(), 0);
        assert_eq!(m.globals.len(), 0);
    }

    #[test]
    fn single_function_single_ret() {
        let m = parse_ir("define void @f() {\n  ret void\n}\n").unwrap();
        assert_eq!(m.functions.len(), 1);
        assert_eq!(m.functions[0].blocks.len(), 1);
        assert_eq!(m.functions[0].blocks[0].instructions.len(), 1);
        assert_eq!(m.functions[0].blocks[0].label, "<entry>");
    }

    #[test]
    fn loop_wrap_shape() {
        let m = parse_ir(LOOP_WRAP).unwrap();
        assert_eq!(m.module_name, "loop-wrap.c");
        assert_eq!(m.functions.len(), 1);
        assert_eq!(m.globals.len(), 5);
        let f = &m.functions[0];
        assert_eq!(f.name, "main");
        assert_eq!(f.blocks.len(), 8);
        let loops = detect_loops(f);
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].header, "for.cond");
        assert_eq!(loops[0].depth, 1);
        // the loop body call is flagged, the setup calls are not
        let main1 = f.calls.iter().find(|c| c.callee == "main1").unwrap();
        assert!(main1.in_loop);
        let fopen = f.calls.iter().find(|c| c.callee == "fopen").unwrap();
        assert!(!fopen.in_loop);
    }

    #[test]
    fn duplicate_label_is_fatal_with_line() {
        let err = parse_ir("define void @f() {\na:\n  ret void\na:\n  ret void\n}\n").unwrap_err();
        assert_eq!(err.line, 4);
        assert!(err.message.contains("duplicate block label"));
    }

    #[test]
    fn unbalanced_braces_are_fatal() {
        let err = parse_ir("define void @f() {\n  ret void\n").unwrap_err();
        assert!(err.message.contains("never closed"));
        let err = parse_ir("}\n").unwrap_err();
        assert!(err.message.contains("unmatched"));
    }

    #[test]
    fn duplicate_function_name_is_fatal() {
        let text = "define void @f() {\n ret void\n}\ndefine void @f() {\n ret void\n}\n";
        let err = parse_ir(text).unwrap_err();
        assert!(err.message.contains("duplicate function name"));
    }

    #[test]
    fn unknown_instructions_count_as_generic() {
        let m = parse_ir(
            "define void @f() {\n  %p = alloca i32\n  frobnicate i32 %p\n  ret void\n}\n",
        )
        .unwrap();
        assert_eq!(m.functions[0].blocks[0].instructions.len(), 3);
        assert_eq!(m.functions[0].blocks[0].instructions[1].opcode, "frobnicate");
    }

    #[test]
    fn load_store_flags_are_exclusive() {
        let m = parse_ir(
            "define void @f(ptr %p) {\n  %v = load i32, ptr %p\n  store i32 %v, ptr %p\n  ret void\n}\n",
        )
        .unwrap();
        let insts = &m.functions[0].blocks[0].instructions;
        assert!(insts[0].is_load && !insts[0].is_store);
        assert!(insts[1].is_store && !insts[1].is_load);
        for i in insts {
            assert!(!(i.is_load && i.is_store));
        }
    }

    #[test]
    fn vector_ops_are_flagged() {
        let m = parse_ir(
            "define void @f(<4 x i32> %a) {\n  %s = add <4 x i32> %a, %a\n  %x = extractelement <4 x i32> %s, i32 0\n  %y = add i32 %x, 1\n  ret void\n}\n",
        )
        .unwrap();
        let insts = &m.functions[0].blocks[0].instructions;
        assert!(insts[0].is_vector);
        assert!(insts[1].is_vector);
        assert!(!insts[2].is_vector);
    }

    #[test]
    fn multi_line_switch_collects_all_targets() {
        let text = "define void @f(i32 %v) {\nentry:\n  switch i32 %v, label %d [\n    i32 0, label %a\n    i32 1, label %b\n  ]\na:\n  ret void\nb:\n  ret void\nd:\n  ret void\n}\n";
        let m = parse_ir(text).unwrap();
        let f = &m.functions[0];
        let mut targets: Vec<&str> = f
            .edges
            .iter()
            .filter(|(from, _)| from == "entry")
            .map(|(_, to)| to.as_str())
            .collect();
        targets.sort_unstable();
        assert_eq!(targets, vec!["a", "b", "d"]);
    }

    #[test]
    fn branch_edges_are_deduplicated() {
        let text = "define void @f(i1 %c) {\nentry:\n  br i1 %c, label %x, label %x\nx:\n  ret void\n}\n";
        let m = parse_ir(text).unwrap();
        assert_eq!(m.functions[0].edges.len(), 1);
    }

    #[test]
    fn fingerprints_are_stable_and_normalized() {
        let a = ir_fingerprint(b"define void @f()\n");
        let b = ir_fingerprint(b"define void @f()\n");
        let c = ir_fingerprint(b"define void @g()\n");
        assert_eq!(a, b);
        assert_ne!(a, c);
        let crlf = ir_fingerprint(b"line one\r\nline two\r\n");
        let lf = ir_fingerprint(b"line one\nline two\n");
        assert_eq!(crlf, lf);
        assert_eq!(a.as_hex().len(), 64);
    }

    #[test]
    fn comments_and_strings_interact_safely() {
        let m = parse_ir(
            "@s = private constant [4 x i8] c\"a;b\\00\"\ndefine void @f() {\n  ret void ; trailing\n}\n",
        )
        .unwrap();
        assert_eq!(m.globals.len(), 1);
        assert_eq!(m.functions[0].blocks[0].instructions.len(), 1);
    }
}
