use thiserror::Error;

/// Failure modes shared by every solver in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("RankDeficient: {0}")]
    RankDeficient(String),
    #[error("NotPositiveDefinite: {0}")]
    NotPositiveDefinite(String),
    #[error("Infeasible: {0}")]
    Infeasible(String),
    #[error("Unbounded: {0}")]
    Unbounded(String),
    #[error("DegenerateParameters: a = {a}, b = {b}")]
    DegenerateParameters { a: f64, b: f64 },
    #[error("NoUnitEigenvalue: top generalized eigenvalue {0} is not 1")]
    NoUnitEigenvalue(f64),
    #[error("PremiseViolated: {0}")]
    PremiseViolated(String),
    #[error("Inconclusive: {0}")]
    Inconclusive(String),
    #[error("SingularRegularizer: {0}")]
    SingularRegularizer(String),
    #[error("InfeasibleConstraint: {0}")]
    InfeasibleConstraint(String),
    #[error("IllPosed: {0}")]
    IllPosed(String),
    #[error("DegenerateModel: {0}")]
    DegenerateModel(String),
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("InvalidInput: {0}")]
    InvalidInput(String),
    #[error("IoFailure: {0}")]
    IoFailure(String),
    #[error("ParseError: line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    /// Short variant name, used by front ends that report the failing check.
    pub fn name(&self) -> &'static str {
        match self {
            Error::RankDeficient(_) => "RankDeficient",
            Error::NotPositiveDefinite(_) => "NotPositiveDefinite",
            Error::Infeasible(_) => "Infeasible",
            Error::Unbounded(_) => "Unbounded",
            Error::DegenerateParameters { .. } => "DegenerateParameters",
            Error::NoUnitEigenvalue(_) => "NoUnitEigenvalue",
            Error::PremiseViolated(_) => "PremiseViolated",
            Error::Inconclusive(_) => "Inconclusive",
            Error::SingularRegularizer(_) => "SingularRegularizer",
            Error::InfeasibleConstraint(_) => "InfeasibleConstraint",
            Error::IllPosed(_) => "IllPosed",
            Error::DegenerateModel(_) => "DegenerateModel",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::InvalidInput(_) => "InvalidInput",
            Error::IoFailure(_) => "IoFailure",
            Error::Parse { .. } => "ParseError",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::IoFailure(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
