//! Differentially private household tabulation under zCDP.
//!
//! Records are mapped to population groups level by level, each group's
//! table basis is chosen from public T01001 counts, and the stacked basis
//! counts of a level are released with exact discrete Gaussian noise.

pub mod accountant;
pub mod domain;
pub mod engine;
pub mod exec;
pub mod io;
pub mod mapper;
pub mod mechanisms;
pub mod planner;
pub mod postprocess;
pub mod synth;
