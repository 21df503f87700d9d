use thiserror::Error;

use crate::grid::GridSpec;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0} vs {1}")]
    GridMismatch(GridSpec, GridSpec),

    #[error("mode radius {radius} m exceeds half the smaller grid extent ({limit} m); the mode would be clipped")]
    ModeClipped { radius: f64, limit: f64 },

    #[error("field is not peak-normalized: amplitude {0} lies outside [0, 1]")]
    NotNormalized(f64),

    #[error("field is identically zero")]
    ZeroField,

    #[error("phase undefined on the sampling loop of radius {radius} m (amplitude {amplitude:e})")]
    UndefinedPhase { radius: f64, amplitude: f64 },

    #[error("basis is rank deficient at member {index} (pivot norm {pivot:e})")]
    RankDeficient { index: usize, pivot: f64 },

    #[error(
        "aperture (center {center:?}, radius {radius}) does not fit inside the frequency grid"
    )]
    ApertureOutsideGrid { center: (f64, f64), radius: f64 },

    #[error("{0}")]
    Empty(&'static str),

    #[error("malformed {kind} data: {msg}")]
    Format { kind: &'static str, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn format(kind: &'static str, msg: impl Into<String>) -> Self {
        Error::Format {
            kind,
            msg: msg.into(),
        }
    }

    /// Process exit code for the command line: 2 for I/O and file-format
    /// failures, 1 for every validation or domain error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Format { .. } => 2,
            _ => 1,
        }
    }
}
