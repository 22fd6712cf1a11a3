//! Front end for the `twowall` solvers: TOML problem files, expression
//! coefficients, and the CSV/JSON artifacts written by each subcommand.

pub mod commands;
pub mod config;
pub mod error;
pub mod expr;
pub mod output;
pub mod setup;

pub use commands::{run, Cli};
pub use config::ProblemSpec;
pub use error::CliError;
pub use expr::{parse_expression, Expression};
