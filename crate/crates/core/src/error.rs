use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("LTE and WiFi grids do not overlap")]
    NonOverlappingGrids,

    #[error("angle {0}° outside [-90°, 90°]")]
    AngleOutOfRange(f64),

    #[error(
        "degenerate constraints: {constraints} constraints on {antennas} antennas \
         (sigma_min={sigma_min:.3e}, sigma_max={sigma_max:.3e})"
    )]
    DegenerateConstraints {
        constraints: usize,
        antennas: usize,
        sigma_min: f64,
        sigma_max: f64,
    },

    #[error("non-positive power entry {value} at antenna {antenna}, subcarrier {subcarrier}")]
    NonPositivePower {
        antenna: usize,
        subcarrier: usize,
        value: f64,
    },

    #[error("cannot normalize a zero vector")]
    ZeroNorm,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("feedback references node {0} which was not tested in the current round")]
    UntestedFeedback(String),

    #[error("search already terminated")]
    SearchTerminated,

    #[error(
        "degrees of freedom exhausted: {limit} nulls available, users {accommodated:?} \
         accommodated, users {rejected:?} rejected"
    )]
    DofExhausted {
        limit: usize,
        accommodated: Vec<usize>,
        rejected: Vec<usize>,
    },

    /// Violation of a named configuration rule.
    #[error("{rule}: {detail}")]
    Validation { rule: &'static str, detail: String },

    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn validation(rule: &'static str, detail: impl Into<String>) -> Self {
        Error::Validation {
            rule,
            detail: detail.into(),
        }
    }

    /// True for errors caused by bad input (scenario files, parameters) rather than a
    /// failure while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation { .. }
                | Error::Parse { .. }
                | Error::AngleOutOfRange(_)
                | Error::NonOverlappingGrids
                | Error::DegenerateConstraints { .. }
        )
    }

    /// Name of the violated rule, if this is a validation error.
    pub fn rule(&self) -> Option<&'static str> {
        match self {
            Error::Validation { rule, .. } => Some(rule),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
