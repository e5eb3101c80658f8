//! Library surface of the command-line tool: JSON formats, run
//! configuration, command implementations, and the acceptance battery.

pub mod accept;
pub mod commands;
pub mod config;
pub mod json;
