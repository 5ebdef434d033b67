//! File formats, configuration, reports, parallel Monte-Carlo and the
//! command-line front end for [`gsamp_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod parallel;
pub mod report;
pub mod table1;

pub use error::{Error, Result};
pub use gsamp_core;
