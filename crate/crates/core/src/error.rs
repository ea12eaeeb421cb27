use thiserror::Error;

use crate::network::Violation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse amount {text:?}")]
pub struct ParseAmountError {
    pub text: String,
}

impl ParseAmountError {
    pub fn new(text: &str) -> Self {
        Self { text: text.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid network: {}", format_violations(.0))]
    InvalidNetwork(Vec<Violation>),

    #[error("edge ({borrower}, {lender}) is not a liability of the network")]
    NotAnEdge { borrower: usize, lender: usize },

    #[error("bank {0} is out of range")]
    BankOutOfRange(usize),

    #[error("negative amount {amount} for bank {bank}")]
    NegativeAmount { bank: usize, amount: String },

    #[error("negative budget {0}")]
    NegativeBudget(String),

    #[error("dimension mismatch: expected {expected} banks, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{operation} requires alpha = beta = 1")]
    DefaultCostsUnsupported { operation: &'static str },

    #[error("refusing {what}: size {actual} exceeds the limit {limit}")]
    GuardExceeded { what: &'static str, limit: usize, actual: usize },

    #[error("no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("singular linear system in {context}")]
    Singular { context: &'static str },

    #[error("no feasible solution: {0}")]
    Infeasible(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("network document: {0}")]
    Document(String),

    #[error(transparent)]
    Parse(#[from] ParseAmountError),
}

fn format_violations(violations: &[Violation]) -> String {
    violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
