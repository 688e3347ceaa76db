use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("matrix is not symmetric: |m[{row}][{col}] - m[{col}][{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },

    #[error("eigensolver did not converge (seed {seed:?}, realization {realization:?})")]
    NoConvergence {
        seed: Option<u64>,
        realization: Option<u64>,
    },

    #[error("eigen residual {residual:e} exceeds contract {bound:e}")]
    Residual { residual: f64, bound: f64 },

    #[error("eigenvectors required but not computed")]
    MissingEigenvectors,

    #[error("{what}: L = {l} exceeds the cost guard {limit}; pass an explicit override")]
    CostGuard { what: &'static str, l: usize, limit: usize },

    #[error("argument {0} lies on the real support of the density of states")]
    OnSupport(String),

    #[error("square-root branch check failed: {0}")]
    Branch(String),

    #[error("Newton inversion failed: G = {g}, last xi = {xi}, residual {residual:e}")]
    Newton { g: String, xi: String, residual: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("realization {realization} (sub-seed {sub_seed:#018x}) failed: {source}")]
    Realization {
        realization: u64,
        sub_seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{} realizations failed: {}", .0.len(), .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Ensemble(Vec<Error>),

    #[error("matrix cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Sub-seeds of every failed realization this error carries.
    pub fn failed_sub_seeds(&self) -> Vec<u64> {
        match self {
            Error::Realization { sub_seed, .. } => vec![*sub_seed],
            Error::Ensemble(errs) => errs.iter().flat_map(Error::failed_sub_seeds).collect(),
            _ => Vec::new(),
        }
    }
}

/// Keeps every failure rather than the first one.
pub(crate) fn collect_all<T>(runs: Vec<Result<T>>) -> Result<Vec<T>> {
    let mut ok = Vec::with_capacity(runs.len());
    let mut bad = Vec::new();
    for r in runs {
        match r {
            Ok(x) => ok.push(x),
            Err(e) => bad.push(e),
        }
    }
    match bad.len() {
        0 => Ok(ok),
        1 => Err(bad.pop().unwrap()),
        _ => Err(Error::Ensemble(bad)),
    }
}
