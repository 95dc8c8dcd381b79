//! Experiment harness and file formats on top of [`twrbf_core`].
//!
//! * [`config`]: JSON experiment configuration.
//! * [`experiment`]: Monte Carlo region experiments on a rayon pool.
//! * [`io`]: channel, beamformer and dataset files (JSON and CSV).
//!
//! The `twrbf` binary exposes these as the `region`, `solve`, `oracle`,
//! `simulate` and `channels` subcommands.

pub mod config;
pub mod error;
pub mod experiment;
pub mod io;

pub use error::{Error, Result};
pub use twrbf_core as core;
