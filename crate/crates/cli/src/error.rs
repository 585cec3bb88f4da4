use std::fmt;

use serde::Serialize;

/// Failure classes with stable exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Parse(String),
    Validation(String),
    Convergence(String),
    Inconclusive(String),
    Io(String),
    Internal(String),
}

#[derive(Debug, Serialize)]
pub struct ErrorReport<'a> {
    pub code: i32,
    pub kind: &'a str,
    pub message: String,
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Parse(_) | Failure::Validation(_) => 2,
            Failure::Convergence(_) => 3,
            Failure::Inconclusive(_) => 4,
            Failure::Io(_) | Failure::Internal(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Parse(_) => "parse",
            Failure::Validation(_) => "validation",
            Failure::Convergence(_) => "convergence",
            Failure::Inconclusive(_) => "inconclusive",
            Failure::Io(_) => "io",
            Failure::Internal(_) => "internal",
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Parse(m)
            | Failure::Validation(m)
            | Failure::Convergence(m)
            | Failure::Inconclusive(m)
            | Failure::Io(m)
            | Failure::Internal(m) => m,
        }
    }

    /// One-line JSON report for stderr.
    pub fn report(&self) -> String {
        let r = ErrorReport { code: self.exit_code(), kind: self.kind(), message: self.message().to_string() };
        serde_json::to_string(&serde_json::json!({ "error": r })).expect("report serializes")
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.kind(), self.message())
    }
}

impl std::error::Error for Failure {}

impl From<vibro::Error> for Failure {
    fn from(e: vibro::Error) -> Self {
        use vibro::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidParams(_) | E::PermanentRest { .. } | E::OrderingViolated { .. } => Failure::Validation(msg),
            E::NoConvergence { .. }
            | E::SingularJacobian { .. }
            | E::BranchLost { .. }
            | E::NotNonSticking
            | E::NotElliptic { .. }
            | E::EigenvaluesReal(_)
            | E::StickingOnPath { .. }
            | E::ItineraryMismatch { .. }
            | E::BracketFailure { .. }
            | E::EventBudgetExceeded { .. } => Failure::Convergence(msg),
            E::NotCertifiablyElliptic { .. }
            | E::ItineraryAmbiguous(_)
            | E::DivisionByZeroInterval
            | E::DomainError(_) => Failure::Inconclusive(msg),
            E::InconsistentEvent(_) => Failure::Internal(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}
