//! Command-line front end for `residua-core`: document formats, reports and
//! the subcommands.

pub mod cli;
pub mod commands;
pub mod doc;
pub mod fixtures;
pub mod json;
pub mod report;
pub mod settings;

pub use cli::run;
