//! Benchmark harness around the scheduling library: seeded generators,
//! algorithm runners with recomputed bound verdicts, and report formats.

pub mod gen;
pub mod report;
pub mod runner;
