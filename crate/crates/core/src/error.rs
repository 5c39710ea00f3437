use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("moduli #{first} ({first_modulus}) and #{second} ({second_modulus}) are not coprime")]
    NonCoprimeModuli {
        first: usize,
        second: usize,
        first_modulus: String,
        second_modulus: String,
    },
    #[error("unfactored: could not split {0} within the iteration budget")]
    Unfactored(String),
    #[error("could not certify primality of {0}")]
    Uncertified(String),
    #[error("prime {0} is ramified (or divides the index); put it into S")]
    RamifiedPrime(u64),
    #[error("prime {prime} must be included in S: {reason}")]
    NeedsSInclusion { prime: u64, reason: String },
    #[error("polynomial is reducible: {0}")]
    Reducible(String),
    #[error("irreducibility could not be certified: {0}")]
    IrreducibilityInconclusive(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("infeasible at precision: {0}")]
    InfeasibleAtPrecision(String),
    #[error("hypothesis ({which}) failed: {detail}")]
    HypothesisFailed { which: String, detail: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no witness found within bounds: {0}")]
    NoWitness(String),
    #[error("retry budget exhausted: {0}")]
    RetryExhausted(String),
    #[error("not found within bound {0}")]
    NotFound(u64),
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}
