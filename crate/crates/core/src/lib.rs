//! Cross-venue prediction market alignment, execution-aware arbitrage detection
//! and price-divergence analytics.

pub mod align;
pub mod analytics;
pub mod arbitrage;
pub mod fixed;
pub mod ingest;
pub mod microstructure;
pub mod model;
pub mod pipeline;
pub mod synth;

pub use fixed::Fixed;
