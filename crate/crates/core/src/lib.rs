//! Partition-guided test generation for small Java-style libraries.
//!
//! The pipeline extracts an API model from source, partitions each method's
//! input space, plans constructor chains over a type dependency graph,
//! instantiates arguments, and executes the generated drivers under
//! branch-edge coverage with exception triage.

pub mod cli;
pub mod executor;
pub mod frontend;
pub mod gateway;
pub mod instantiator;
pub mod lang;
pub mod model;
pub mod par;
pub mod partitioner;
pub mod pipeline;
pub mod report;
pub mod selector;
pub mod tdg;
