#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod cli;
pub mod compat;
pub mod constructs;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod linalg;
pub mod residual;
pub mod spec_file;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
