//! Batch analysis of foliated spacetimes: spec parsing, pipeline
//! orchestration, and report emission for the `closure-lab` binary.

pub mod expr;
pub mod fields_io;
pub mod pipeline;
pub mod report;
pub mod spec;
