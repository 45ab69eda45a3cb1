//! Generated column table for the default feature schema.

use super::features::{ColumnKind, FeatureScope};

/// The default scoped feature schema: 141 named columns in dump order.
/// The first sixteen are module-wide aggregates, the final twenty-three
/// are per-loop, and the large middle group holds call-site/inlining
/// counters that sit outside the textual-IR subset this crate analyzes.
pub const DEFAULT_COLUMNS: &[(&str, FeatureScope, ColumnKind)] = &[
    ("average-store-instructions-per-function", FeatureScope::Module, ColumnKind::Float),
    ("average-load-instructions-per-function", FeatureScope::Module, ColumnKind::Float),
    ("average-instructions-per-function", FeatureScope::Module, ColumnKind::Float),
    ("global-variable-count", FeatureScope::Module, ColumnKind::Int),
    ("critical-edge-count", FeatureScope::Module, ColumnKind::Int),
    ("total-edge-count", FeatureScope::Module, ColumnKind::Int),
    ("loop-count", FeatureScope::Module, ColumnKind::Int),
    ("median-calls-per-function", FeatureScope::Module, ColumnKind::Int),
    ("average-calls-per-function", FeatureScope::Module, ColumnKind::Float),
    ("total-function-calls", FeatureScope::Module, ColumnKind::Int),
    ("total-instruction-count", FeatureScope::Module, ColumnKind::Int),
    ("average-bb-per-function", FeatureScope::Module, ColumnKind::Float),
    ("total-bb-count", FeatureScope::Module, ColumnKind::Int),
    ("function-count", FeatureScope::Module, ColumnKind::Int),
    ("node-count", FeatureScope::Module, ColumnKind::Int),
    ("edge-count", FeatureScope::Module, ColumnKind::Int),
    ("is-tail", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("is-must-tail", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("is-in-inner-loop", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("is-indirect", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("opt-code", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("mandatory-only", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("mandatory-kind", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("loop-level", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("cost-estimate", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("nr-ctant-params", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callsite-height", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("block-freq", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-BlockWithMultipleSuccessorsPerLoop", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-BlockWithMultipleSuccessorsPerLoop", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-InstrPerLoop", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-InstrPerLoop", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-AvgNestedLoopLevel", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-AvgNestedLoopLevel", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-AvgVecInstr", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-AvgVecInstr", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-SuccessorPerBlock", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-SuccessorPerBlock", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-InstructionPerBlock", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-InstructionPerBlock", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-MaxCallsiteBlockFreq", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-MaxCallsiteBlockFreq", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-EntryBlockFreq", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-EntryBlockFreq", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-NumOfCallUsesInLoop", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-NumOfCallUsesInLoop", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-NumCallsiteInLoop", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-NumCallsiteInLoop", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-IsRecursive", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-IsRecursive", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-CallUsage", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-CallUsage", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-CallerHeight", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-CallerHeight", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-CBwithArg", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-CBwithArg", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-ConditionalBranch", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-ConditionalBranch", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-CallReturnPtr", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-CallReturnPtr", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-PtrCallee", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-PtrCallee", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-PtrArgs", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-PtrArgs", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-MaxDomTreeLevel", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-MaxDomTreeLevel", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-MaxLoopDepth", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-MaxLoopDepth", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-Loops", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-Loops", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-IsLinkOnce", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-IsLinkOnce", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-IsLinkOnceODR", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-IsLinkOnceODR", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-IsLocal", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-IsLocal", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-Calls", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-Calls", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-Blocks", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-Blocks", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-InitialSize", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-InitialSize", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("hot-callsite", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("cold-callsite", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-users", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-users", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-conditionally-executed-blocks", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-conditionally-executed-blocks", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-basic-block-count", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-basic-block-count", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("nested-inline-cost-estimate", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("nested-inlines", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("is-multiple-blocks", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("last-call-to-static-bonus", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("cold-cc-penalty", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callsite-cost", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("constant-offset-ptr-args", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("constant-args", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("simplified-instructions", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("dead-blocks", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("num-loops", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("unsimplified-common-instructions", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("switch-default-dest-penalty", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("switch-penalty", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("case-cluster-penalty", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("jump-table-penalty", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("indirect-call-penalty", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("lowered-call-arg-setup", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("load-relative-intrinsic", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("call-argument-setup", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("call-penalty", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("load-elimination", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-average-component-size", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-average-component-size", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("sroa-losses", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("callee-scc-size", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("caller-scc-size", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("sroa-savings", FeatureScope::CalleeCaller, ColumnKind::Int),
    ("IsFixedTripCount", FeatureScope::Loop, ColumnKind::Int),
    ("MaxLoopHeight", FeatureScope::Loop, ColumnKind::Int),
    ("IsOuterMostLoop", FeatureScope::Loop, ColumnKind::Int),
    ("IsInnerMostLoop", FeatureScope::Loop, ColumnKind::Int),
    ("TotBlocksPerLoop", FeatureScope::Loop, ColumnKind::Int),
    ("AvgNumLoadInstPerLoop", FeatureScope::Loop, ColumnKind::Float),
    ("TotLoopInstCount", FeatureScope::Loop, ColumnKind::Int),
    ("NumStoreInstPerLoop", FeatureScope::Loop, ColumnKind::Int),
    ("NumLoadInstPerLoop", FeatureScope::Loop, ColumnKind::Int),
    ("AvgNumLoadInstPerLoopNest", FeatureScope::Loop, ColumnKind::Float),
    ("TotLoopNestInstCount", FeatureScope::Loop, ColumnKind::Int),
    ("NumStoreInstPerLoopNest", FeatureScope::Loop, ColumnKind::Int),
    ("NumLoadInstPerLoopNest", FeatureScope::Loop, ColumnKind::Int),
    ("AvgNumInsts", FeatureScope::Loop, ColumnKind::Float),
    ("AvgStoreSetSize", FeatureScope::Loop, ColumnKind::Float),
    ("IndVarSetSize", FeatureScope::Loop, ColumnKind::Int),
    ("NumPartitions", FeatureScope::Loop, ColumnKind::Int),
    ("StepValueInt", FeatureScope::Loop, ColumnKind::Int),
    ("FinalIVValueInt", FeatureScope::Loop, ColumnKind::Int),
    ("InitialIVValueInt", FeatureScope::Loop, ColumnKind::Int),
    ("Size", FeatureScope::Loop, ColumnKind::Int),
    ("MaxTripCount", FeatureScope::Loop, ColumnKind::Int),
    ("TripCount", FeatureScope::Loop, ColumnKind::Int),
];
