//! Library surface behind the `saddlekit` binary: config parsing, the
//! experiment runner, and the CSV/SVG artifact writers.

pub mod config;
pub mod csvio;
pub mod error;
pub mod runner;
pub mod svg;
