use thiserror::Error;

use crate::dist::DistError;
use crate::network::NetworkError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("{count} opponent profiles exceed the cap of {cap}")]
    SupportExplosion { count: usize, cap: usize },
    #[error("{count} assignments exceed the enumeration cap of {cap}")]
    EnumerationCap { count: usize, cap: usize },
    #[error("{count} pure profiles exceed the tensor cap of {cap}")]
    TensorCap { count: usize, cap: usize },
    #[error("no solution on the hypothesized support")]
    Infeasible,
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("{players} players exceed the mixed-search limit of {cap}")]
    PlayersCap { players: usize, cap: usize },
    #[error("price of anarchy needs at least one equilibrium")]
    EmptyEquilibria,
    #[error("no bracketing interval and no valid corner: {0}")]
    NoBracket(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code for reporting.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Dist(e) => match e {
                DistError::Empty => "DIST_EMPTY",
                DistError::AllDegenerate => "ALL_DEGENERATE",
                DistError::NonFinite(_) => "NON_FINITE",
                DistError::InvalidComponent(_) => "INVALID_COMPONENT",
                DistError::InvalidGrid(_) => "INVALID_GRID",
                DistError::InvalidProbability(_) => "INVALID_PROBABILITY",
                DistError::GridOverflow { .. } => "GRID_OVERFLOW",
            },
            Error::Network(e) => e.code(),
            Error::SupportExplosion { .. } => "SUPPORT_EXPLOSION",
            Error::EnumerationCap { .. } => "ENUMERATION_CAP",
            Error::TensorCap { .. } => "TENSOR_CAP",
            Error::Infeasible => "INFEASIBLE",
            Error::NonConvergence(_) => "NON_CONVERGENCE",
            Error::PlayersCap { .. } => "PLAYERS_CAP",
            Error::EmptyEquilibria => "EMPTY_EQUILIBRIA",
            Error::NoBracket(_) => "NO_BRACKET",
            Error::Parse(_) => "PARSE_ERROR",
            Error::Validation(_) => "VALIDATION_ERROR",
            Error::Unsupported(_) => "UNSUPPORTED",
            Error::Io(_) => "IO_ERROR",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
