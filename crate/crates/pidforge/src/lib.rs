//! Process-graph toolkit for engineering-diagram digitization pipelines:
//! annotation pre-processing, synthetic diagram generation with duplicate
//! filtering, patch extraction/stitching, and graph-level evaluation.

pub mod assignment;
pub mod cli;
pub mod collapse;
pub mod dedup;
pub mod detsim;
pub mod fixtures;
pub mod folds;
pub mod generate;
pub mod geometry;
pub mod graphml;
pub mod manifest;
pub mod metrics;
pub mod model;
pub mod patcher;
pub mod render;
pub mod route;
pub mod stitcher;
pub mod templates;
