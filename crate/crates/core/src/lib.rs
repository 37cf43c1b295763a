//! Optimal recovery of a linear quantity of interest from linear
//! observations, when the unknown lies in the intersection of two centered
//! hyperellipsoids.

// `!(x > t)` is used on purpose so that NaN fails every positivity check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dominance;
pub mod ell1;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod recovery;
pub mod scenarios;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
