use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("symbols live on different lattices")]
    LatticeMismatch,
    #[error("matrix dimension {dim} exceeds the cap {cap}")]
    SizeCap { dim: usize, cap: usize },
    #[error("degenerate denominator |tau| = {tau:e} at theta = {theta:?}, xi = {xi:?}")]
    DegenerateDenominator { tau: f64, theta: Vec<i32>, xi: Vec<f64> },
    #[error("congruence closure exceeded {cap} points; rho is too small for the chosen alphas")]
    ParamsInconsistent { cap: usize },
    #[error("rho too small: {0}")]
    RhoTooSmall(String),
    #[error("parameter constraint violated: {0}")]
    Constraint(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("expression error: {0}")]
    Expr(String),
    #[error("matrix is not Hermitian (residual {0:e})")]
    NonHermitian(f64),
    #[error("eigensolver failed: {0}")]
    Eigen(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("monotonicity violated: {0}")]
    Monotonicity(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
