//! Numerical laboratory for SU(2) Yang–Mills flow on degenerating surfaces.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field;
pub mod flow;
pub mod foliation;
pub mod geom;
pub mod harness;
pub mod spectral;
pub mod su2;
pub mod variation;

pub use error::{Error, Result};
pub use su2::{Alg, Su2};
