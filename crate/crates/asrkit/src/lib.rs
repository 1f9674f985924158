//! File formats, audio IO and the `asrkit` command line on top of
//! `asrkit-core`.

pub mod cli;
pub mod error;
pub mod formats;
pub mod pipeline;

pub use error::{Error, Result};
