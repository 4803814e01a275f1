use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate cocycle: singular values differ by {log_gap:e} in log, frame undefined")]
    DegenerateCocycle { log_gap: f64 },
    #[error("invalid regime: {0}")]
    InvalidRegime(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("insufficient samples: got {got}, need at least {need}")]
    InsufficientSamples { got: usize, need: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("schedule not representable: {0}")]
    ScheduleNotRepresentable(String),
    #[error("frame degenerate at step {step}: angle {angle:e}")]
    FrameDegenerate { step: usize, angle: f64 },
    #[error("newton diverged (best residual {residual:e})")]
    NewtonDiverged { residual: f64 },
    #[error("periodic point not hyperbolic: |trace| = {trace}")]
    NotHyperbolic { trace: f64 },
    #[error("manifold construction failed: {0}")]
    ManifoldBuildFailed(String),
    #[error("rational input: continued fraction terminates")]
    RationalInput,
}

impl Error {
    /// Failures of the numerics rather than of the request.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateCocycle { .. }
                | Error::FrameDegenerate { .. }
                | Error::NewtonDiverged { .. }
                | Error::NotHyperbolic { .. }
                | Error::ManifoldBuildFailed(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
