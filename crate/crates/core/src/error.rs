use thiserror::Error;

use crate::system::SystemError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    System(#[from] SystemError),

    #[error("degenerate frame: {0}")]
    Degenerate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("splitting estimate did not converge at sample {index} (last-step rotation {residual:.3e} rad)")]
    Unconverged { index: usize, residual: f64 },

    #[error("{unconverged} of {total} samples have unconverged bundle estimates")]
    TooManyUnconverged { unconverged: usize, total: usize },

    #[error("spectral radius iteration did not converge; best bound {bound}")]
    SpectralRadius { bound: f64 },

    #[error("quadrature refinement cap of {cap} samples exceeded; partial log-volume {partial_log_volume}, achieved relative tolerance {achieved_tol:.3e}")]
    RefinementCap {
        cap: usize,
        partial_log_volume: f64,
        achieved_tol: f64,
    },

    #[error("fit window holds {0} points, need at least 3")]
    FitWindow(usize),

    #[error("sample too small for ladder: no δ has 3 unsaturated values of n")]
    SampleTooSmall,

    #[error("map has no inverse available")]
    NoInverse,

    #[error("Newton inverse failed to converge (residual {residual:.3e})")]
    NewtonInverse { residual: f64 },

    #[error("internal cross-check failed: {0}")]
    CrossCheck(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code for reports and CLI output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::System(e) => e.code(),
            Error::Degenerate(_) => "degenerate",
            Error::Precondition(_) => "precondition",
            Error::Unconverged { .. } => "unconverged",
            Error::TooManyUnconverged { .. } => "too_many_unconverged",
            Error::SpectralRadius { .. } => "spectral_radius",
            Error::RefinementCap { .. } => "refinement_cap",
            Error::FitWindow(_) => "fit_window",
            Error::SampleTooSmall => "sample_too_small",
            Error::NoInverse => "no_inverse",
            Error::NewtonInverse { .. } => "newton_inverse",
            Error::CrossCheck(_) => "cross_check",
            Error::Config(_) => "config",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
        }
    }
}
