use thiserror::Error;

use crate::crystal::State;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("ions {first} and {second} coincide")]
    SingularConfiguration { first: usize, second: usize },

    #[error("equilibrium search did not converge after {iterations} iterations (gradient max-norm {gradient_norm:e})")]
    Convergence {
        iterations: usize,
        gradient_norm: f64,
        last_iterate: Vec<f64>,
    },

    #[error("{what}: no sign change in [{lo}, {hi}]")]
    Search { what: &'static str, lo: f64, hi: f64 },

    #[error("{state} structure is unstable: smallest Hessian eigenvalue {min_eigenvalue:e}")]
    UnstableStructure { state: State, min_eigenvalue: f64 },

    #[error("Bogoliubov coefficient matrix u is ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("non-physical quench map: eigenvalue {eigenvalue} of A has modulus >= 1")]
    NonPhysicalMap { eigenvalue: f64 },

    #[error("squeezing parameter out of domain: |a| = {value} >= 1")]
    Domain { value: f64 },

    #[error("Gaussian integral diverges: pivot {pivot} of Omega has real part {real_part:e} <= 0")]
    ConvergenceViolation { pivot: usize, real_part: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("Fock truncation not converged at cutoff {cutoff} (change {change:e}); try cutoff >= {suggested}")]
    Cutoff {
        cutoff: usize,
        change: f64,
        suggested: usize,
    },

    #[error("numeric consistency violated: {0}")]
    NumericConsistency(String),
}
