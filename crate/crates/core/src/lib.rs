#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod chain;
pub mod collapse;
pub mod dilation;
pub mod error;
pub mod fixtures;
pub mod generators;
pub mod linalg;
pub mod postcollapse;
pub mod povm;
pub mod tol;
pub mod transform;

pub use error::{Error, Result};
pub use tol::Tolerances;
