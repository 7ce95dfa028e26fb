//! Simulation of 112 Gb/s intensity-modulation / direct-detection links.

pub mod adaptive;
pub mod dmt;
pub mod error;
pub mod evaluate;
pub mod experiment;
pub mod link;
pub mod pam;
pub mod sigproc;

pub use error::{Error, Result};
