//! Adaptive work extraction from unknown qubit states.

pub mod accounting;
pub mod bandit;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod jc;
pub mod linalg;
pub mod strategies;
pub mod thermal;
pub mod verify;

pub use error::{Error, Result};
