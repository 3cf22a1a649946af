//! Config files, fixtures, reports and the verification suite for
//! `impulse-fac-core`. The `impulse-fac` binary is a thin layer over this
//! library.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod commands;
pub mod config;
mod error;
pub mod fixtures;
pub mod verify;

pub use config::{Problem, RunConfig};
pub use error::CliError;
pub use fixtures::{list_fixtures, load_fixture, Fixture};
