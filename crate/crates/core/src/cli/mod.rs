//! Scenario files, generators, reports and command dispatch for the `wco`
//! binary.

pub mod commands;
pub mod generate;
pub mod report;
pub mod scenario;
pub mod selftest;
