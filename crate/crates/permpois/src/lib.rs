//! Host-side companion to `permpois-core`: a rayon scheduler for the
//! simulation studies, CSV/JSON formats, SVG charts and the `permpois` CLI.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod plot;
pub mod runner;

pub use error::{Error, Result};
pub use runner::{Runner, Type1Run, Type1Settings};
