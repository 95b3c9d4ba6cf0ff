#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod diagnostics;
pub mod expr;
pub mod fd;
pub mod field;
pub mod geom;
pub mod integrate;
pub mod mechanics;
pub mod symmetry;
pub mod systems;

pub use error::{Error, Result};
