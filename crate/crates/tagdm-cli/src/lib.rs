//! Command-line front end for the tagdm mining engine: query execution,
//! the benchmark harness, and the synthetic data generator.

pub mod bench;
pub mod query;
pub mod report;
pub mod synth;
