use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inverse out of range: y = {y}")]
    InverseOutOfRange { y: f64 },

    #[error("x = {x} lies outside the tabulated range [{lo}, {hi}]")]
    OutsideTable { x: f64, lo: f64, hi: f64 },

    #[error("grid too small: {len} points, at least {min} required")]
    GridTooSmall { len: usize, min: usize },

    #[error("self-map violation: {family} maps {point} to modulus {modulus}")]
    SelfMapViolation {
        family: String,
        point: String,
        modulus: f64,
    },

    #[error("non-finite function value at {point}")]
    NonFiniteSample { point: String },

    #[error("domain exhausted after a_{last_n}")]
    ExhaustedDomain { last_n: usize },

    #[error("not monotone: {0}")]
    NotMonotone(String),

    #[error("profile mismatch: {0}")]
    ProfileMismatch(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
