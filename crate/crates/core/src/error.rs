use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input `{field}`: {reason}")]
    InvalidInput { field: &'static str, reason: String },

    #[error("unknown unit `{0}`")]
    UnknownUnit(String),

    #[error("field point (rho={rho:e} m, z={z:e} m) lies on the filament of loop {loop_index}")]
    SingularPoint { loop_index: usize, rho: f64, z: f64 },

    #[error("no interior minimum of |B| in the search box: {0}")]
    NoGuide(String),

    #[error("|B| vanishes at the guide minimum; supply an offset field B0 > 0")]
    NonSmoothPotential,

    #[error("sensing axis is orthogonal to the rotation (sin(latitude) = 0)")]
    DegenerateOrientation,

    #[error("PSD domain mismatch: expected {expected}, found {found}")]
    DomainMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("integral diverges in band [{lower:e}, {upper:e}] Hz")]
    Divergent { lower: f64, upper: f64 },

    #[error("averaging time {tau:e} s is shorter than one cycle ({cycle:e} s)")]
    InvalidAveraging { tau: f64, cycle: f64 },

    #[error(
        "target {target:e} rad/s unreachable; best achievable in bracket is {achieved:e} rad/s"
    )]
    Infeasible { target: f64, achieved: f64 },
}

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidInput {
        field,
        reason: reason.into(),
    }
}
