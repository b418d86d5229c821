//! Numerics for Kummer-law independence-preserving maps.

pub mod dist;
pub mod error;
pub mod harness;
pub mod ktransform;
pub mod lattice;
pub mod maps;
pub mod specfun;

mod quad;

pub use error::{Error, Result};
