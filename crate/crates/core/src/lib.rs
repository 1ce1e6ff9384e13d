//! Agler-class tests for polynomial truncations on the polydisk.
//!
//! Given the Taylor coefficients of a polynomial up to order `N`, the
//! crate either produces positive semi-definite blocks `A^1..A^d`
//! certifying that the truncation extends to a Schur-Agler function, or a
//! commuting contractive nilpotent matrix tuple `T` with `|p(T)| > 1`.
//! Certificates continue into sums of squares and unitary colligations.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cfcert;
pub mod conic;
pub mod error;
pub mod gallery;
pub mod lattice;
pub mod niltuple;
pub mod numkernel;
pub mod pick;
pub mod poly;
pub mod realization;

pub use error::{Error, Result};
pub use lattice::{IndexLattice, MultiIndex};
pub use numkernel::{CMatrix, HermMatrix, C64};
pub use poly::Poly;
