use thiserror::Error;

/// Errors raised across lattice construction, operator assembly, solves and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("lattice construction failed: {0}")]
    Construction(String),

    #[error("state space too large: {states} states exceeds cap {cap}")]
    StateSpaceTooLarge { states: usize, cap: usize },

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("eigensolver did not converge (max residual {residual:.3e})")]
    EigenNotConverged { residual: f64 },

    #[error("quadrature did not converge: tail bound {tail:.3e} after horizon {horizon:.3e}")]
    QuadratureNotConverged { tail: f64, horizon: f64 },

    #[error("simulation aborted at t = {time:.6}: occupancy {occupancy} at site {site} exceeds cap {cap}")]
    OccupancyOverflow {
        time: f64,
        site: usize,
        occupancy: u64,
        cap: u64,
    },

    #[error("relaxation rate unavailable: {0}")]
    MissingSpectrum(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
