pub mod agents;
pub mod error;
pub mod handcrafted;
pub mod harness;
pub mod meanings;
pub mod metrics;
pub mod neural;

pub use error::{Error, Result};
