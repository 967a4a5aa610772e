//! Benchmark core: problem instances, exact oracles and search traces,
//! prompt rendering, test-time scaling strategies, model backends, answer
//! verification and report aggregation.

pub mod eval;
pub mod gateway;
pub mod gen;
pub mod oracle;
pub mod prompt;
pub mod report;
pub mod scaling;
pub mod task;
