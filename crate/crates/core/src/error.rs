use std::fmt;

/// Which side of `0 <= 3p - q <= 2` a symmetric parameter pair fell off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    Lower,
    Upper,
}

impl fmt::Display for BoundSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundSide::Lower => f.write_str("3p - q >= 0"),
            BoundSide::Upper => f.write_str("3p - q <= 2"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("symmetric parameters violate {side} (3p - q = {value})")]
    SymmetricBound { side: BoundSide, value: f64 },

    #[error("state is not normalized (squared norm {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("no GHZ signal: {0}")]
    NoGhzSignal(&'static str),

    #[error("correlation {e} is not above the boundary {boundary}")]
    NoSeparation { e: f64, boundary: f64 },

    #[error("target correlation {target} is not bracketed by gamma in [{lo}, {hi}]")]
    NotBracketed { target: f64, lo: f64, hi: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot parse {what} from {input:?}")]
    Parse { what: &'static str, input: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<f64> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(value)
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            lo,
            hi,
        })
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    check_range(name, value, 0.0, 1.0)
}
