//! File formats and plumbing around `ttca-core`: JSON scenarios, CSV
//! trajectories and metrics, and an SVG of the driven paths.

pub mod export;
pub mod plot;
pub mod scenario;

pub use scenario::{load_scenario, load_scenario_file, LoadError};
