//! Command-line driver for sequential experimental design sweeps.
//!
//! Three subcommands cover the workflow end to end:
//!
//! * `run <config>` — execute every (function, policy, repeat) combination
//!   described by a flat `key = value` config file, one CSV per run plus a
//!   manifest of all effective settings;
//! * `aggregate <dir> --metric {gap|fracerr}` — reduce finished runs to a
//!   functions × policies comparison table with significance flags;
//! * `demo1d <out.csv> --seed N` — dump the one-dimensional acquisition
//!   curves that illustrate why batch and lookahead policies spread their
//!   evaluations while myopic improvement does not.
//!
//! All numbers in result files are written with 17 significant digits, so
//! parsing a file reproduces the in-memory values exactly, and reruns of the
//! same config and seed produce byte-identical files (with `timing = off`,
//! which zeroes the one genuinely non-reproducible column).

pub mod config;
pub mod demo;
pub mod error;
pub mod format;
pub mod report;
pub mod runner;

pub use config::{parse_config, Profile, RunConfig, TaskKind};
pub use error::CliError;
