//! Command-line harness for the manipulab toolkit: configuration,
//! dataset/model persistence, experiment recipes, comparison scenarios,
//! and SVG plots.

pub mod config;
pub mod experiments;
pub mod io;
pub mod plot;
pub mod scenarios;
