use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("improper transfer function: leading denominator coefficient is zero")]
    Improper,

    #[error("ill-posed interconnection: {0}")]
    IllPosed(String),

    #[error("eigenvalue solver failed on a {0}x{0} matrix")]
    EigenFailure(usize),

    #[error("matrix is not Schur stable (spectral radius {0})")]
    NotSchur(f64),

    #[error("Lyapunov solver: relative residual {residual:e} after {iterations} doubling steps")]
    Lyapunov { residual: f64, iterations: usize },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("marginal factorization: spectral zero within {distance:e} of the unit circle")]
    MarginalFactorization { distance: f64 },

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("nominal system is not strictly proper (g(0) = {0})")]
    NotStrictlyProper(f64),

    #[error("invalid horizon: {0}")]
    Horizon(String),

    #[error("no finite asymptotic variance: J = {0} >= 1")]
    NoFiniteVariance(f64),

    #[error("nominal loop is unstable (spectral radius {0})")]
    NominalUnstable(f64),

    #[error("(A, B2) is not stabilizable: mode {mode} is uncontrollable")]
    NotStabilizable { mode: String },

    #[error("(C2, A) is not detectable: mode {mode} is unobservable")]
    NotDetectable { mode: String },

    #[error("Riccati iteration did not converge in {iterations} steps (last change {change:e})")]
    RiccatiNoConvergence { iterations: usize, change: f64 },

    #[error("Riccati inner matrix is singular (condition number {condition:e})")]
    RiccatiSingular { condition: f64 },

    #[error("Riccati fixed point is not stabilizing (closed-loop spectral radius {radius})")]
    RiccatiNotStabilizing { radius: f64 },

    #[error("Riccati residual {residual:e} exceeds tolerance")]
    RiccatiResidual { residual: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for failures of the Riccati machinery and its solvability checks.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NotStabilizable { .. }
                | Error::NotDetectable { .. }
                | Error::RiccatiNoConvergence { .. }
                | Error::RiccatiSingular { .. }
                | Error::RiccatiNotStabilizing { .. }
                | Error::RiccatiResidual { .. }
        )
    }
}
