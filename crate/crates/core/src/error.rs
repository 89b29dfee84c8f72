use thiserror::Error;

/// Errors raised by the model, solver and experiment layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid edge #{index} ({source_node}, {target_node}, {weight}): {reason}")]
    InvalidEdge {
        index: usize,
        source_node: usize,
        target_node: usize,
        weight: f64,
        reason: String,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("numerical quality: {0}")]
    Numerical(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error(
        "budget of player {player} is {budget}, below the surplus threshold {threshold}; \
         budget-constrained equilibria are not supported"
    )]
    BudgetBelowThreshold {
        player: u8,
        budget: f64,
        threshold: f64,
    },

    #[error("inapplicable regime: {0}")]
    InapplicableRegime(String),

    #[error("histories are not comparable: {0}")]
    Mismatch(String),

    #[error("incomplete history: {recorded} of {expected} stages recorded")]
    IncompleteHistory { recorded: usize, expected: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
