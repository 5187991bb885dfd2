//! Scenario files, result records and the command runner behind the CLI.

mod commands;
mod record;
mod scenario;

pub use commands::*;
pub use record::*;
pub use scenario::*;

#[cfg(test)]
mod tests;
