//! Litmus-test engine and optimization-portability checker.
//!
//! The crate models the pipeline end to end:
//!
//! 1. [`lang`] parses a small toy concurrent language (one thread per line)
//!    and flattens conditionals into branch-free *pre-traces*.
//! 2. [`pretrace`] defines events (reads, writes, updates over shared
//!    locations) and pre-traces (event sets plus program order), including a
//!    JSON wire format for hand-written inputs.
//! 3. [`relations`] is a small algebra of finite binary relations (union,
//!    inverse, composition, closures, cycle detection) over a fixed event
//!    universe; all consistency rules are compositions of a few primitives.
//! 4. [`execution`] enumerates candidate executions (reads-from choices
//!    crossed with memory-order permutations) and compares observable
//!    behaviors.
//! 5. [`models`] decides consistency of an execution under SC, TSO or SRA,
//!    classifies the minimal cycles of inconsistent executions, and carries
//!    two independent oracles (an SC linearization check and an operational
//!    store-buffer machine for TSO) used to cross-validate the rule sets.
//! 6. [`effects`] diffs two pre-traces into a transformation effect
//!    (eliminated/introduced events, removed/added program order), classifies
//!    it (write introduction/elimination, de-orderings, thread-unsafe write
//!    /read introduction), checks behavioral safety, and detects triangular
//!    races.
//! 7. [`portability`] combines the above into portability verdicts and a
//!    bounded exhaustive search that validates the portability theorems on
//!    every generated program pair within configurable bounds.
//!
//! The [`dot`] module renders pre-traces and executions as Graphviz digraphs
//! for debugging.

mod error;
pub mod dot;
pub mod effects;
pub mod execution;
pub mod lang;
pub mod models;
pub mod portability;
pub mod pretrace;
pub mod relations;

pub use error::{Error, Result};
