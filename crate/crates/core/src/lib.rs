//! Barycentric subdivision schemes with nonnegative masks on Hadamard spaces.
//!
//! A mask `a` on `Z^s` satisfying the basic sum rule
//! `sum_j a_{i-2j} = 1` refines data `x: Z^s -> X` by
//! `(Sx)_i = argmin_y sum_j a_{i-2j} d(x_j, y)^2`. The crate provides the
//! spaces, the scheme, the linear cascade and contractivity certificates,
//! and the characteristic Markov chain with transition probabilities
//! `a_{i-2j}`.

pub mod error;
pub mod grid;
pub mod linalg;
pub mod linear;
pub mod markov;
pub mod masks;
pub mod spaces;
pub mod stats;
pub mod subdivision;

pub use error::{Error, Result};

/// Version of this crate, recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
