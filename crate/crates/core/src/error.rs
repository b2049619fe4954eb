use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("deck size {n} outside supported range 1..={max}")]
    DeckSizeOutOfRange { n: usize, max: usize },

    #[error("shelf count must be at least 1")]
    ZeroShelves,

    #[error("valley count {k} outside 0..={max}")]
    ValleyIndexOutOfRange { k: i64, max: usize },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("non-finite input {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("deck of {n} cards has no consecutive valley ratios")]
    NoTiltRatios { n: usize },

    #[error("table size mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("enumeration needs {needed} weighted terms, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },

    #[error("effective shelf count exceeds configured bound {bound}")]
    ShelfBoundExceeded { bound: u64 },

    /// An exact identity that must hold failed. Always an arithmetic bug.
    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),
}

impl Error {
    /// True for errors that come from hitting a configured computation bound.
    pub fn is_bound(&self) -> bool {
        matches!(
            self,
            Error::DeckSizeOutOfRange { .. }
                | Error::BudgetExceeded { .. }
                | Error::ShelfBoundExceeded { .. }
        )
    }

    pub fn is_invariant_violation(&self) -> bool {
        matches!(self, Error::InvariantViolation(_))
    }
}
