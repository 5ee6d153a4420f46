use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Why a projection post-step could not be carried out with the current step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    /// The explicit predictor has zero discrete norm.
    ZeroNorm,
    /// `β = (LΦ̃, LΦ̃)` is not positive.
    NonPositiveBeta,
    /// `β² − αδ` is not positive, so the multiplier has no real small root.
    NegativeDiscriminant,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::ZeroNorm => write!(f, "predictor has zero norm"),
            RejectReason::NonPositiveBeta => write!(f, "beta <= 0"),
            RejectReason::NegativeDiscriminant => write!(f, "beta^2 - alpha*delta <= 0"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("incompatible fields: {0}")]
    IncompatibleFields(String),
    #[error("non-finite value in Runge-Kutta stage {stage}")]
    NonFiniteState { stage: usize },
    #[error("step size underflow at t = {t}: tau = {tau:e}")]
    StiffnessFailure { t: f64, tau: f64 },
    #[error("fixed-point iteration did not converge in {iterations} iterations (last update {residual:e})")]
    FixedPointDivergence { iterations: usize, residual: f64 },
    #[error("projection rejected the step: {0}")]
    RejectStep(RejectReason),
    #[error("projection failed after {halvings} step halvings: {reason}")]
    ProjectionFailure { reason: RejectReason, halvings: u32 },
    #[error("quadratization radicand {radicand:e} is not positive at node {node}")]
    QuadratizationDomain { node: usize, radicand: f64 },
    #[error("reference energy (Φ⁰, LΦ⁰) = {0:e} is not positive")]
    DegenerateReference(f64),
    #[error("numerical failure at step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidGrid(_)
                | Error::InvalidDomain(_)
                | Error::IncompatibleFields(_)
                | Error::DegenerateReference(_)
        )
    }
}
