//! Holonomies of flat graded superconnections on simplices, computed as
//! truncated series of iterated integrals, and the A∞ machinery to check
//! them.
//!
//! Everything numerical is generic over [`Scalar`] (`f32` or `f64`).
//! Simplices are `Δ_k = {1 ≥ t_1 ≥ … ≥ t_k ≥ 0}` with vertex `v_i =
//! (1, …, 1, 0, …, 0)` carrying `i` ones.

#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod ainfty;
pub mod chen;
pub mod error;
pub mod forms;
pub mod generators;
pub mod graded;
pub mod holonomy;
pub mod oracles;
pub mod poly;
pub mod quad;
pub mod scalar;
pub mod simplex;
pub mod simplicial;
pub mod verify;

pub use error::{Error, Result};
pub use graded::{compose_graded, koszul_sign, GradedMap, GradedVectorSpace, Suspension};
pub use scalar::{Mat, Scalar};
