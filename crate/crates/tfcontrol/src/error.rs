use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration is internally inconsistent (grid sizes, operator/space
    /// pairings, missing fields).
    #[error("configuration error: {0}")]
    Config(String),

    /// Numerical input outside the admissible set (non-finite values,
    /// non-normalized states).
    #[error("input error: {0}")]
    Input(String),

    /// Shapes of fields, grids and systems do not match.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A numerical routine failed (non-finite objective, no local minimum
    /// found, singular solve).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
    pub fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
