use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error(
        "guard band violated: predicted beam width {predicted:.4} m exceeds limit {limit:.4} m"
    )]
    GuardBand { predicted: f64, limit: f64 },

    #[error("element does not fit on grid: {0}")]
    ElementOffGrid(String),

    #[error("phase screen is {got}x{got} but field is {expected}x{expected}")]
    GridMismatch { expected: usize, got: usize },

    #[error("field carries no power")]
    ZeroPower,
}

impl SimError {
    /// True for failures caused by the beam outgrowing its grid.
    pub fn is_guard_band(&self) -> bool {
        matches!(self, SimError::GuardBand { .. } | SimError::ElementOffGrid(_))
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
