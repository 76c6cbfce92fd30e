//! Numerical construction of segregated polygonal multi-bump solutions for a
//! two-component Schrödinger system with sublinear coupling.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::needless_range_loop)]

pub mod error;
pub mod geometry;
pub mod grid;
pub mod groundstate;
pub mod config;
pub mod deadcore;
pub mod energy;
pub mod model;
pub mod numerics;
pub mod outer;
pub mod problem;
pub mod reduction;
pub mod verify;

pub use error::{Error, Result};
