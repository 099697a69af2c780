use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid transition matrix: {0}")]
    InvalidMatrix(String),
    #[error("transition matrix is not irreducible")]
    NotIrreducible,
    #[error("transition matrix is not primitive")]
    NotPrimitive,
    #[error("stationary vector has a zero entry at state {0}")]
    ZeroStationaryEntry(usize),
    #[error("no state u with p_uj > 0 for every j")]
    NoRowPositiveState,
    #[error("symbol {symbol} out of range for an alphabet of size {k}")]
    SymbolOutOfRange { symbol: usize, k: usize },
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point lies outside the ambient box")]
    OutsideDomain,
    #[error("denominator of a Moebius map vanishes on the box")]
    DenominatorVanishes,
    #[error("map {0} does not send the ambient box into itself")]
    NotSelfMap(usize),
    #[error("system is not in any monotone class S(t_1..t_m)")]
    NotMonotoneSystem,
    #[error("witness words must be nonempty")]
    EmptyWord,
    #[error("witness words end in different symbols")]
    LastSymbolMismatch,
    #[error("word {0} is not admissible")]
    InadmissibleWord(String),
    #[error("no connector word of length <= {0} found")]
    ConnectorNotFound(usize),
    #[error("enumeration of {words} words exceeds the budget of {budget}")]
    BudgetExceeded { words: u128, budget: u128 },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("oracle hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("curve has fewer than 3 usable points")]
    DegenerateCurve,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
