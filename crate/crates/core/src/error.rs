use thiserror::Error;

/// Errors shared across the workbench. Checkers report violations through
/// [`crate::report::ClauseReport`]; `Error` is reserved for inputs that make an
/// operation meaningless (unknown ids, broken preconditions, exhausted budgets).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("element {0} is not in the universe")]
    InvalidElement(usize),

    #[error("elements {a} and {b} have {count} maximal lower bounds; meet is ambiguous")]
    NonUniqueMaximalLowerBound { a: usize, b: usize, count: usize },

    #[error("operation requires an antisymmetric order, got a quasiorder")]
    RequiresPartialOrder,

    #[error("map family violates the inverse convention at node {node}")]
    InverseMismatch { node: usize },

    #[error("words have different lengths or sign patterns; no common lower bound exists")]
    Incomparable,

    #[error("node meet missing at position {position}; underlying order is not tree-like there")]
    NoNodeMeet { position: usize },

    #[error("atlas state cap {cap} exceeded; verdict would only be sound up to the explored closure")]
    AtlasCapExceeded { cap: usize },

    #[error("search budget {budget} exceeded")]
    SearchBudgetExceeded { budget: usize },

    #[error("maps of the solving set disagree at element {element}: {first} vs {second}")]
    Inconsistent {
        element: usize,
        first: usize,
        second: usize,
    },

    #[error("the given set does not solve the parameter")]
    NotASolution,

    #[error("stage sequence misses member {missing} of the dense family")]
    InvalidDSequence { missing: usize },

    #[error("blueprint has no output for a realized index type: {0}")]
    BlueprintUndefined(String),

    #[error("blueprint outputs are inconsistent: {0}")]
    BlueprintInconsistent(String),

    #[error("tuple family violates uniformity clause {clause}")]
    FamilyViolatesUniformity { clause: String },

    #[error("input error: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
