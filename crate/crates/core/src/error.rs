use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is asymmetric at ({row}, {col}): |a_ij - a_ji| = {gap:e}")]
    AsymmetricBeyondTolerance { row: usize, col: usize, gap: f64 },

    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("nonzero diagonal entry {value} at index {index}")]
    NonzeroDiagonal { index: usize, value: f64 },

    #[error("non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("similarity bound 0 <= g_ij <= g_ii violated at ({row}, {col})")]
    SimilarityBoundViolated { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("at least one new object is required")]
    NoNewObjects,

    #[error("eigen-solver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    ConvergenceFailure { sweeps: usize, residual: f64 },

    #[error("only {available} eigenvalues above tolerance, {requested} requested; use a smaller dimension")]
    InsufficientPositiveSpectrum { requested: usize, available: usize },

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("smallest singular value {sigma_min:e} below threshold relative to {sigma_max:e}")]
    ZeroSingularValue { sigma_min: f64, sigma_max: f64 },

    #[error(
        "configuration is rank deficient (singular values {sigma_min:e} / {sigma_max:e}); use a smaller dimension"
    )]
    RankDeficientConfiguration { sigma_min: f64, sigma_max: f64 },

    #[error("lambda = {lambda} is within the guard band of eigenvalue {eigenvalue} of -X'X")]
    NearSingular { lambda: f64, eigenvalue: f64 },

    #[error("failed to bracket the minimizer of phi on [0, {scanned_to:e}]")]
    BracketingFailure { scanned_to: f64 },

    #[error("objective became non-finite")]
    NonFiniteObjective,

    #[error("y coincides with configuration point {index} while its dissimilarity is positive")]
    CoincidentPoint { index: usize },

    #[error("grid oracle supports d <= 3, got d = {0}")]
    DimensionTooLarge(usize),

    #[error("invalid grid specification: {0}")]
    InvalidGrid(String),

    #[error("invalid option: {0}")]
    InvalidOption(String),
}

pub type Result<T> = std::result::Result<T, Error>;
