use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not unimodular (det = {0})")]
    NotUnimodular(String),
    #[error("Möbius pole: c·x + d = 0 at x = {0}")]
    Pole(String),
    #[error("enumeration needs {needed} nodes but the budget is {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("no free seed pair found within the search budget")]
    NoPairFound,
    #[error("densest covering cell holds a single word; try a larger ell or epsilon")]
    NoCollision,
    #[error("invalid K = {0}: need K >= 2")]
    InvalidK(u64),
    #[error("invalid n = {0}: need n >= 2")]
    InvalidN(usize),
    #[error("relation is not monotone: ({0},{1}) crosses ({2},{3})")]
    NotMonotoneRelation(usize, usize, usize, usize),
    #[error("unknown export format {0:?}")]
    UnknownFormat(String),
    #[error("input too large: {0}")]
    TooLarge(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("power iteration did not converge (relative residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("{0} is not a prime in [2, 65536]")]
    BadPrime(u64),
    #[error("bad subspace dimension: {0}")]
    BadDimension(String),
    #[error("probe matrices are linearly dependent in R^4 (det4 = 0)")]
    DegenerateProbes,
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("parse error: {0}")]
    Parse(String),
}
