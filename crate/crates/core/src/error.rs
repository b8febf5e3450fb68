use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument error: {0}")]
    Argument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "grid resolution: cutoff {cutoff} exceeds the Nyquist frequency {nyquist}; \
         a step dt <= {required_dt} is required"
    )]
    GridResolution {
        cutoff: f64,
        nyquist: f64,
        required_dt: f64,
    },

    #[error("step size: {reason}; suggested dt <= {suggested_dt}")]
    StepSize { reason: String, suggested_dt: f64 },

    #[error("step size: {reason}; suggested dt >= {suggested_dt}")]
    StepTooSmall { reason: String, suggested_dt: f64 },

    #[error("degenerate density at cell {cell}: rho = {value} is below the floor {floor}")]
    DegenerateDensity { cell: usize, value: f64, floor: f64 },

    #[error("scheme failure at t = {time}: {reason}")]
    SchemeFailure { time: f64, reason: String },

    #[error("symbol is not real and even on the grid at omega = {omega}: value {re} + {im}i")]
    NonRealSymbol { omega: f64, re: f64, im: f64 },

    #[error("no sign change in bracket [{lo}, {hi}]: residuals {f_lo} and {f_hi}")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error(
        "branch selection failed at omega = {omega}: back-substitution residual {residual} exceeds {tolerance}"
    )]
    BranchSelection {
        omega: f64,
        residual: f64,
        tolerance: f64,
    },

    #[error("no convergence: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
