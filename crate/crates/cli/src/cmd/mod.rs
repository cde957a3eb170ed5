pub mod combinat;
pub mod deform;
pub mod fock;
pub mod locality;
pub mod nuclear;
pub mod smatrix;

use crate::io::{bad_input, Failure};

pub(crate) fn at_least(name: &str, value: usize, min: usize) -> Result<usize, Failure> {
    if value < min {
        return bad_input(format!("{name} must be at least {min}, got {value}"));
    }
    Ok(value)
}
