use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("rapidity {re}+{im}i lies outside the strip of analyticity")]
    OutOfStrip { re: f64, im: f64 },
    #[error("pole within tolerance at {re}+{im}i ({what})")]
    Pole { re: f64, im: f64, what: String },
    #[error("branch tracking failed near theta = {theta}: phase step {step}")]
    Branch { theta: f64, step: f64 },
    #[error("family does not commute: defect {defect} at ({a}, {b})")]
    NonCommuting { a: f64, b: f64, defect: f64 },
    #[error("rapidities {i} and {j} tie within tolerance")]
    Tie { i: usize, j: usize },
    #[error("size guard: {what} = {value} exceeds {limit}")]
    TooLarge { what: String, value: usize, limit: usize },
    #[error("no sign change of {what} on [{lo}, {hi}]")]
    Bracket { what: String, lo: f64, hi: f64 },
    #[error("quadrature under-resolved: {0}")]
    Resolution(String),
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
