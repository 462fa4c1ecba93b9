//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while building model objects, checking
/// axioms, or running a solver.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("unknown item `{0}`")]
    UnknownItem(String),
    #[error("utility matrix has wrong shape: expected {rows} rows of {cols} entries")]
    ShapeMismatch { rows: usize, cols: usize },
    #[error("instance has {expected} {kind}, argument has {got}")]
    DimensionMismatch {
        kind: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("allocation owner index {owner} out of range for {n} agents")]
    OwnerOutOfRange { owner: usize, n: usize },
    #[error("bundles do not form an exhaustive partition of the items")]
    NotAPartition,
    #[error("sequence must contain at least one round")]
    EmptySequence,
    #[error("sequence rounds disagree on the number of agents or items")]
    MixedRounds,
    #[error("column {item} sums to {got}, expected the round count {expected}")]
    BadColumnSum {
        item: usize,
        got: u64,
        expected: u64,
    },
    #[error("cannot parse `{0}` as an exact rational")]
    ParseRational(String),
    #[error("round count {k} is not a positive multiple of the agent count {n}")]
    RoundsNotMultiple { k: u64, n: usize },
    #[error("operation requires exactly two agents, instance has {0}")]
    NotTwoAgents(usize),
    #[error("operation requires a positive even round count, got {0}")]
    OddRounds(u64),
    #[error("search budget exhausted after {nodes} nodes")]
    BudgetExhausted { nodes: u64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal invariant breached: {0}")]
    Invariant(String),
    #[error("malformed linear program: {0}")]
    MalformedProgram(String),
    #[error("invalid fractional allocation: {0}")]
    BadFractional(String),
    #[error("{axiom} is not defined for scope {scope}")]
    UnsupportedScope { axiom: String, scope: String },
    #[error("translating the lottery needs {k} rounds, above the hard cap of {cap}")]
    TranslationTooLarge { k: u64, cap: u64 },
}
