//! Batch front end for the market simulator: configuration files, grid
//! orchestration, and artifact writing. The binary in `main.rs` is a thin
//! argument layer over this library.

pub mod config;
pub mod grid;
