pub mod cli;
pub mod corrupt;
pub mod error;
pub mod geom;
pub mod metrics;
pub mod nmm;
pub mod synth;

pub use error::{Error, Result};
