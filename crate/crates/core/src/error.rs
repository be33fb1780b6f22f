use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// Validation failures (bad parameters, malformed specs, too little data) are
/// kept apart from runtime failures (quadrature, I/O) so the CLI can map them
/// onto distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unstable queue: require 0 < lambda < mu (and lambda/mu <= {max_rho}), got lambda={lambda}, mu={mu}")]
    Unstable { lambda: f64, mu: f64, max_rho: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("quadrature did not converge on [{lo}, {hi}]: estimated error {error:e} exceeds {tol:e}")]
    Quadrature { lo: f64, hi: f64, error: f64, tol: f64 },

    #[error("{0}")]
    Runtime(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Unstable { .. }
                | Error::InvalidDistribution(_)
                | Error::InvalidArgument(_)
                | Error::InsufficientData(_)
                | Error::Inconsistent(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
