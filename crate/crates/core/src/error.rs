use num_rational::BigRational;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Partial progress reported when a configured bit budget is hit.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetReport {
    /// Iterations completed before the budget was hit.
    pub steps_done: u64,
    /// Last iterate that stayed within the budget.
    pub partial: Vec<BigRational>,
    /// Error bound achieved by `partial`, when one can be certified.
    pub achieved_bound: Option<BigRational>,
    /// The budget in bits per rational.
    pub limit_bits: u64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular matrix")]
    SingularMatrix,

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("equation for `{var}` is not probabilistic: coefficients and constant sum to {sum} > 1")]
    NotProbabilistic { var: String, sum: BigRational },

    #[error("improper grammar: {}", fmt_sums(.sums))]
    ImproperGrammar { sums: Vec<(String, BigRational)> },

    #[error("rule probabilities of `{nonterminal}` sum to {sum} > 1")]
    SumExceedsOne { nonterminal: String, sum: BigRational },

    #[error("bit budget of {} bits exceeded after {} steps", .0.limit_bits, .0.steps_done)]
    BudgetExceeded(Box<BudgetReport>),

    #[error("conditioning budget not met: need rule accuracy {required}, have {actual}")]
    ConditioningFailure {
        required: Box<BigRational>,
        actual: Box<BigRational>,
    },

    #[error("grammar is trivial (start symbol derives the empty string with probability 1)")]
    TrivialInput,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed input: {0}")]
    Malformed(String),
}

fn fmt_sums(sums: &[(String, BigRational)]) -> String {
    sums.iter()
        .map(|(nt, s)| format!("{nt} sums to {s}"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}
