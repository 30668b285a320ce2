//! Shadow-based quantum digital signatures, simulated classically.

pub mod adversary;
pub mod bits;
pub mod certify;
pub mod circuit;
pub mod cli;
pub mod ecc;
pub mod error;
pub mod gates;
pub mod gf2;
pub mod iceberg;
pub mod rng;
pub mod shadows;
pub mod signatures;
pub mod sim;

pub use error::{Error, Result};
