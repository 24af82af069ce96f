use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("function value is not finite at k = {k}: {value}")]
    NonFiniteValue { k: u64, value: f64 },

    #[error("series truncation failed to reach tolerance {tol} (K = {reached})")]
    TruncationFailure { tol: f64, reached: u64 },

    #[error("statistic is affine in the cell count (degenerate variance)")]
    DegenerateStatistic,

    #[error("enumeration budget exceeded: {count} compositions > budget {budget}")]
    BudgetExceeded { count: u128, budget: u128 },

    #[error("insufficient replicates: alpha * reps = {alpha_reps} < 20")]
    InsufficientReps { alpha_reps: f64 },

    #[error("sample-size search found no qualifying size up to k_max = {k_max}")]
    SampleSizeNotFound { k_max: u64 },

    #[error("fixed-point iteration did not converge after {iterations} steps")]
    NonConvergence { iterations: usize },

    #[error("infeasible perturbation: cell probability {p} <= 0 at cell {cell}")]
    InfeasiblePerturbation { cell: usize, p: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
