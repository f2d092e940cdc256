//! Benchmark harness and file plumbing behind the `caseplan` command line
//! tool: experiment configuration, trial records, the conservative sign
//! test, quality statistics, and deterministic TSV/JSON reports.

pub mod bench;
pub mod io;
