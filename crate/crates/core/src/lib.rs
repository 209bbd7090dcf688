//! Moment-closure radiation hydrodynamics in slab geometry.
//!
//! The crate builds the HMP_N closure tables, assembles the coupled
//! Euler–radiation relaxation system, certifies its structural stability
//! numerically, integrates it on a periodic 1D grid and compares the result
//! with the non-relativistic limit system.
#![no_std]
#![cfg_attr(test, allow(unused_imports))]

extern crate alloc;

pub mod closure;
pub mod error;
pub mod limit;
pub mod linalg;
pub mod model;
pub mod quadrature;
pub mod solver;
pub mod stability;

pub use error::{Error, Result};
pub use nalgebra;
