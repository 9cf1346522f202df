//! Benchmarking of molecular representations on binary property-prediction
//! datasets, with a hierarchical Bayesian Bradley–Terry model for comparing
//! representations across datasets.

pub mod bbt;
pub mod config;
pub mod fingerprints;
pub mod harness;
pub mod hash;
pub mod matrix;
pub mod molgraph;
pub mod pipeline;
pub mod reports;
pub mod scores;
