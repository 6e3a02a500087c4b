//! Experiment harness: training runs, parameter sweeps, the exhaustive
//! oracle and signalling-overhead tables, each written as CSV or JSON with a
//! manifest sidecar.

pub mod app;
pub mod manifest;
pub mod overhead;
pub mod simulate;
pub mod stats;
pub mod sweep;
pub mod training;
