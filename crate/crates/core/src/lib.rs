pub mod adaptation;
pub mod agents;
pub mod captioner;
pub mod error;
pub mod experiments;
pub mod game;
pub mod gradcheck;
pub mod metrics;
pub mod numerics;
pub mod setup;
#[cfg(test)]
pub(crate) mod testutil;
pub mod world;

pub use error::{Error, Result};
