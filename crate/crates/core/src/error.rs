use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("infeasible projection: min cost {min_cost} exceeds threshold {threshold}")]
    Infeasible { min_cost: f64, threshold: f64 },
    #[error("threshold {threshold} is within {gap:e} of the minimum cost")]
    DegenerateFeasibility { threshold: f64, gap: f64 },
    #[error("regularity violated: {0}")]
    RegularityViolation(String),
    #[error("no segment of the solution path brackets the target")]
    NoRoot,
    #[error("no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("bisection exceeded {iterations} iterations")]
    BisectionOverflow { iterations: usize },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("state {state}: {source}")]
    AtState {
        state: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
