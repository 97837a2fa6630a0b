//! Command-line front end for the complex-droop toolkit.
//!
//! The binary (`cdroop`) certifies stability conditions, predicts steady
//! states, reduces networks, spot-checks the decrease inequalities and
//! simulates event scenarios — all driven by one JSON config file. The
//! pieces live here as a library so integration tests can parse configs
//! and build problems without shelling out.

pub mod app;
pub mod config;
pub mod output;
pub mod report;
