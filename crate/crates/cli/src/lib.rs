//! Experiment front end for the aerial-IRS simulator: config loading, the
//! train/eval/physics-report drivers and the acceptance suite.

pub mod acceptance;
pub mod io;
pub mod runner;
