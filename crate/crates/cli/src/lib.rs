// SPDX-License-Identifier: MIT OR Apache-2.0

//! Command-line front end for `vibsysid`: fit, assess, bench, footprint and
//! generate.

pub mod args;
pub mod bench;
pub mod error;
pub mod io;
pub mod run;

pub use error::CliError;
pub use run::main_with_args;
