//! Phase-ordering autotuner over recipes of named pass subsequences.
//!
//! The crate searches, per IR partition, over variable-length recipes of
//! subsequence identifiers (`"ACDCD"`), applies each candidate through an
//! external optimizer subprocess, scores the transformed IR with a pluggable
//! cost model, and reports the winning recipe together with the full search
//! trace.
//!
//! Layering, bottom to top:
//!
//! - [`recipe`]: subsequence libraries, recipes, the search space and its
//!   perturbation operators.
//! - [`search`]: simulated-annealing and genetic engines over an abstract
//!   cost callback.
//! - [`ir`]: a textual-IR subset parser, loop detection, and the scoped
//!   static feature set with its CSV dump format.
//! - [`cost`]: score types, the feature-history window, and the concrete
//!   cost models (external scorer protocol, linear surrogate, instruction
//!   count, file size, cycle count).
//! - [`driver`]: partitioning, recipe application, caching, early exit, and
//!   result/trace emission.
//! - [`cli`]: the command-line front end.

pub mod cli;
pub mod cost;
pub mod driver;
pub mod ir;
pub mod proc;
pub mod recipe;
pub mod search;
