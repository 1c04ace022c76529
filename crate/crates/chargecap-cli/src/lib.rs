//! Command-line front end: spec-file parsing, argument parsing, and the
//! subcommand drivers shared between `main` and the integration tests.

pub mod parse;
pub mod run;
pub mod specfile;
