//! Std companion to `modro-core`: file formats, model serialization,
//! wall-clock benchmarks, experiment orchestration, and the `modro` CLI.

pub mod bench;
mod error;
pub mod experiments;
pub mod formats;
pub mod model_io;
pub mod report;

pub use error::{Error, Result};
