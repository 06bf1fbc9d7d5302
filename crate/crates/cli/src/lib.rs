//! Command-line harness around `collapse-core`: JSON configs in, CSV traces
//! and JSON reports out.

pub mod commands;
pub mod config;
