use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed pairing: {0}")]
    MalformedPairing(String),
    #[error("malformed diagram: {0}")]
    MalformedDiagram(String),
    #[error("subdiagram is not full")]
    NotFull,
    #[error("invalid forest: {0}")]
    InvalidForest(String),
    #[error("no incoming edge: {0}")]
    NoIncomingEdge(String),
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("configuration lies in no Hepp sector")]
    NotCovered,
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("|lambda| = {0} is outside the radius of convergence")]
    OutOfRadius(f64),
    #[error("Green's function is singular at the origin")]
    SingularPoint,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("sector acceptance {0:.2e} is below the sampling threshold")]
    EmptySector(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
