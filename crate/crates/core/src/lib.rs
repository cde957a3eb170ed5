//! Integrable QFT toolkit: factorizing S-matrices, S-symmetric Fock spaces
//! on a rapidity grid, contraction combinatorics, wedge-local fields,
//! deformed fermionic fields and the modular nuclearity bound chain.

pub mod combinat;
pub mod deform;
pub mod error;
pub mod fields;
pub mod fock;
pub mod linalg;
pub mod nuclear;
pub mod num;
pub mod perm;
pub mod smatrix;

pub type C = num_complex::Complex<f64>;

pub use error::{Error, Result};
