#![no_std]
// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::needless_range_loop)]

extern crate alloc;

pub mod density;
pub mod error;
pub mod mellin;
pub mod quadrature;
pub mod series;
pub mod spectra;
pub mod strata;
pub mod torsion;

pub use error::{Error, Result};
