//! Library side of the `auv` command-line tool.

pub mod commands;
pub mod config;
pub mod scene;
