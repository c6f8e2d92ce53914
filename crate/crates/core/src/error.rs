//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// A field sampler was queried outside the region it covers.
    #[error("field sampler queried outside its domain at s={s}, x=({}, {})", x[0], x[1])]
    OutsideSampler { s: f64, x: [f64; 2] },

    /// A characteristic left the sampled region; carries the last valid state.
    #[error("trajectory left the field domain at s={s}, X=({}, {}), P=({}, {})", x[0], x[1], p[0], p[1])]
    OutOfDomain { s: f64, x: [f64; 2], p: [f64; 2] },

    #[error("non-finite value ({what}) at s={s}, x=({}, {})", x[0], x[1])]
    Numeric { what: String, s: f64, x: [f64; 2] },

    #[error("support overflow at t={t}: f={value:e} at |p|_inf={p_inf} (limit {limit})")]
    SupportOverflow { t: f64, value: f64, p_inf: f64, limit: f64 },

    #[error("insufficient history: no data covering tau in [{from}, {to}]")]
    InsufficientHistory { from: f64, to: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Short class name used in CLI diagnostics.
    pub fn class(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::OutsideSampler { .. } => "outside-sampler",
            Error::OutOfDomain { .. } => "out-of-domain",
            Error::Numeric { .. } => "numeric",
            Error::SupportOverflow { .. } => "support-overflow",
            Error::InsufficientHistory { .. } => "insufficient-history",
            Error::Io(_) => "io",
        }
    }
}
