//! Experiment orchestration: grid sweeps over skeleton-muscle pairings and
//! condition-number sweeps, with CSV/JSON/SVG emission.

pub mod config;
pub mod output;
pub mod runner;
pub mod svg;

pub use config::{Formats, RunConfig};
pub use runner::{run_heatmap, run_kappa_plot, CellStatus, KappaKind};
