//! Quaternion-domain multi-focus color image fusion.

pub mod error;
pub mod focus;
pub mod fusion;
pub mod patch;
pub mod pipeline;
pub mod qfed;
pub mod quat;

pub use error::{Error, Result};
