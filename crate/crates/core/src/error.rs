use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch for `{name}`: expected {expected}, got {actual}")]
    Dimension {
        name: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "system outside Assumption 1 regime: row {row} has off-diagonal mass {off_diagonal} >= diagonal {diagonal}"
    )]
    NotDiagonallyDominant {
        row: usize,
        diagonal: f64,
        off_diagonal: f64,
    },

    #[error("Assumption 1 violated: worst row ratio {worst_row_ratio} at MU {row}")]
    AssumptionViolated { row: usize, worst_row_ratio: f64 },

    #[error("matrix is numerically singular at pivot {pivot}")]
    Singular { pivot: usize },

    #[error("linear solve residual {residual:e} exceeds bound {bound:e}")]
    Residual { residual: f64, bound: f64 },

    #[error("best-response dynamics did not converge in {iterations} iterations (last step {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },

    #[error("degenerate in-degree distribution: mean in-degree is zero")]
    DegenerateInDegree,

    #[error("social strength too large: gamma * {what} = {value} >= 1")]
    SocialStrength { what: &'static str, value: f64 },

    #[error("singular (r̄, ψ) system (condition number {condition:e})")]
    SingularAggregateSystem { condition: f64 },

    #[error(
        "configuration model stub matching failed: {unresolved} of {edges} edges unresolved after {rounds} rounds"
    )]
    StubMatching {
        unresolved: usize,
        edges: usize,
        rounds: usize,
    },

    #[error("reward schedule cannot be resolved per MU: {0}")]
    Reward(String),

    #[error("edge list {path}:{line}: {reason}")]
    EdgeList { path: String, line: usize, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

pub(crate) fn check_len(name: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension { name, expected, actual })
    }
}
