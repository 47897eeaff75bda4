//! Differentiable SAR image rendering for triangle meshes.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]
#![cfg_attr(test, allow(clippy::field_reassign_with_default, clippy::type_complexity))]

pub mod commands;
pub mod error;
pub mod geometry;
pub mod grad;
pub mod imaging;
pub mod io;
pub mod loss;
pub mod mesh;
pub mod optim;
pub mod raster;
pub mod recon;
pub mod render;

pub use error::{Error, Result};

#[cfg(test)]
mod testutil;
