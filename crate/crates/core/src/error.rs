use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("event bracket at t = {t} did not converge within {iters} bisections")]
    BracketFailure { t: f64, iters: usize },
    #[error("friction {friction} is not below forcing {forcing}; the particle never leaves rest")]
    PermanentRest { forcing: f64, friction: f64 },
    #[error("inconsistent event: {0}")]
    InconsistentEvent(String),
    #[error("event budget of {limit} exceeded at t = {t}")]
    EventBudgetExceeded { limit: usize, t: f64 },
    #[error("event itinerary changes across the finite-difference stencil (h = {h})")]
    ItineraryMismatch { h: f64 },
    #[error("orbit sticks at t = {t}; the stroboscopic map is not differentiable there")]
    StickingOnPath { t: f64 },
    #[error("trajectory is not non-sticking")]
    NotNonSticking,
    #[error("trace {trace} is not in the elliptic range (-2, 2)")]
    NotElliptic { trace: f64 },
    #[error("Newton did not converge after {iters} iterations (residual {residual:e})")]
    NoConvergence { iters: usize, residual: f64 },
    #[error("Newton matrix is singular (|det| = {det:e})")]
    SingularJacobian { det: f64 },
    #[error("branch lost at parameter value {param}")]
    BranchLost { param: f64 },
    #[error("perturbed eigenvalues are real: {0:?}")]
    EigenvaluesReal((f64, f64)),
    #[error("interval division by an interval containing zero")]
    DivisionByZeroInterval,
    #[error("interval domain error: {0}")]
    DomainError(String),
    #[error("event itinerary is not interval-separable: {0}")]
    ItineraryAmbiguous(String),
    #[error("trace enclosure [{lo}, {hi}] is not inside (-2, 2)")]
    NotCertifiablyElliptic { lo: f64, hi: f64 },
    #[error("particle ordering violated at t = {t}")]
    OrderingViolated { t: f64 },
}
