//! Driver for the rmvqe pipeline: run configuration, target and scattering
//! solves, and R-matrix output.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
