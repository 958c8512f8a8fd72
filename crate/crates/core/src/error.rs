use thiserror::Error;

/// Failures raised by the geometric, hypothesis, and solver routines.
///
/// Variant names double as the stable error taxonomy reported by the CLI.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("set is empty at t = {t}")]
    EmptySet { t: f64 },
    #[error("projection solver did not converge after {iterations} iterations (kkt residual {residual:e})")]
    NonconvergedProjection { iterations: usize, residual: f64 },
    #[error("point at distance {distance} lies outside the enlargement of radius {limit}")]
    OutsideEnlargement { distance: f64, limit: f64 },
    #[error("sample is empty")]
    EmptySample,
    #[error("no probe direction produced a consistent proximal normal")]
    ProbeFailed,
    #[error("ball of radius {radius} is not contained in the set (violation {violation:e})")]
    BallNotContained { radius: f64, violation: f64 },
    #[error("point is infeasible: constraint {index} has value {value:e}")]
    Infeasible { index: usize, value: f64 },
    #[error("kappa = {kappa} is not negative")]
    NonnegativeKappa { kappa: f64 },
    #[error("sampling found no point with a nonempty epsilon-active set")]
    NoActivePoints,
    #[error("normal probe failed at a sampled point")]
    NormalProbeFailed,
    #[error("complement of the set is empty")]
    EmptyComplement,
    #[error("initial point is infeasible (distance {distance:e})")]
    InfeasibleStart { distance: f64 },
    #[error("step {step} is too large for the projection enlargement")]
    StepTooLarge { step: usize },
    #[error("coefficient {which} has norm {norm} above its envelope {bound} at t = {t}")]
    EnvelopeViolated {
        which: &'static str,
        t: f64,
        norm: f64,
        bound: f64,
    },
    #[error("discrete Gronwall hypothesis fails at node {index}")]
    HypothesisViolated { index: usize },
    #[error("no feasible grid point inside the search ball")]
    NoFeasibleGridPoint,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl SweepError {
    /// Short taxonomy name, e.g. `StepTooLarge`.
    pub fn name(&self) -> &'static str {
        match self {
            SweepError::EmptySet { .. } => "EmptySet",
            SweepError::NonconvergedProjection { .. } => "NonconvergedProjection",
            SweepError::OutsideEnlargement { .. } => "OutsideEnlargement",
            SweepError::EmptySample => "EmptySample",
            SweepError::ProbeFailed => "ProbeFailed",
            SweepError::BallNotContained { .. } => "BallNotContained",
            SweepError::Infeasible { .. } => "Infeasible",
            SweepError::NonnegativeKappa { .. } => "NonnegativeKappa",
            SweepError::NoActivePoints => "NoActivePoints",
            SweepError::NormalProbeFailed => "NormalProbeFailed",
            SweepError::EmptyComplement => "EmptyComplement",
            SweepError::InfeasibleStart { .. } => "InfeasibleStart",
            SweepError::StepTooLarge { .. } => "StepTooLarge",
            SweepError::EnvelopeViolated { .. } => "EnvelopeViolated",
            SweepError::HypothesisViolated { .. } => "HypothesisViolated",
            SweepError::NoFeasibleGridPoint => "NoFeasibleGridPoint",
            SweepError::InvalidInput(_) => "InvalidInput",
        }
    }
}

pub type Result<T, E = SweepError> = std::result::Result<T, E>;
