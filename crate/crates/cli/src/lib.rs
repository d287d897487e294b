//! Command-line companion to `causal-text-core`: corpus ingestion, row
//! dumps, and the simulation study runner.

pub mod harness;
pub mod ingest;
pub mod rowfile;
