use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field length {got} does not match grid ({expected} nodes)")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite values in {0}")]
    NonFinite(String),

    /// A function is evaluated outside the set where it is defined, e.g. a
    /// form on 𝓗₁⁽⁰⁾ applied to a field with nonzero boundary value.
    #[error("domain violation: {0}")]
    Domain(String),

    /// Missing or inconsistent problem data. The message names the violated
    /// hypothesis.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("compatibility condition violated: φ(0) = {phi0}, f(0) = {f0}")]
    Compatibility { phi0: String, f0: String },

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable label.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::GridMismatch => "grid_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::Compatibility { .. } => "compatibility",
            Error::Consistency(_) => "consistency",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}
