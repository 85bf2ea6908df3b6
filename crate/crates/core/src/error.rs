use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed grids, lengths or parameters.
    #[error("input error: {0}")]
    Input(String),
    /// Input is well-formed but outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Incompatible grids (aliasing, non-matching steps).
    #[error("configuration error: {0}")]
    Config(String),
    #[error("admissibility error: {0}")]
    Admissibility(String),
    #[error("degenerate boundary operator: {0}")]
    Degenerate(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(format!($($arg)*)))
    };
}
pub(crate) use bail;
