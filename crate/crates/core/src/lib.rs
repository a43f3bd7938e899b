//! Economical power sharing for islanded AC microgrids built from
//! series-cascaded inverters.
//!
//! The crate is organized bottom-up:
//!
//! - [`dispatch`]: cost-minimizing dispatch and the optimal sharing maps.
//! - [`network`]: phasor model of the series loop.
//! - [`controller`]: the decentralized frequency/voltage laws.
//! - [`simulator`]: closed-loop time-domain runs.
//! - [`smallsignal`]: linearized state matrix, eigenvalues and root loci.
//! - [`config`]: JSON scenario files.

pub mod config;
pub mod controller;
pub mod dispatch;
mod error;
pub mod network;
pub mod selftest;
pub mod simulator;
pub mod smallsignal;

pub use config::{parse_config, parse_config_str, parse_schedule, GridConfig, Scheme};
pub use error::{Error, Result};
