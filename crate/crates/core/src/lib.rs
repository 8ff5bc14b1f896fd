pub mod dataset;
pub mod embed;
pub mod eval;
pub mod graph_metrics;
pub mod matrix;
pub mod ml;
pub mod patch;
pub mod scg;
pub mod stats;
pub mod synth;
pub mod syntax;
