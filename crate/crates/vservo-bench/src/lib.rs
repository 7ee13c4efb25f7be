//! Benchmark harness for the visual servoing suite: paired episode
//! suites, controller ablations, noise-robustness sweeps, a
//! constructed hard case, and SVG plot output.

pub mod ablate;
pub mod config;
pub mod hardcase;
pub mod plot;
pub mod runner;
pub mod suite;
pub mod sweep;
pub mod table;

pub use config::BenchConfig;
pub use table::{ResultTable, Row};
