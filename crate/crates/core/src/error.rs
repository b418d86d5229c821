use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Arguments outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature ran out of subdivisions. The best estimate is kept
    /// in log-space because the integrals involved routinely overflow `f64`.
    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (log estimate {log_estimate}, relative error bound {rel_error:e})"
    )]
    NoConvergence {
        log_estimate: f64,
        rel_error: f64,
        subdivisions: usize,
    },

    /// A rejection sampler accepted fewer than 1 in 10^4 proposals.
    #[error("sampler degenerate: acceptance rate {rate:e} over {proposals} proposals")]
    SamplerDegenerate { rate: f64, proposals: u64 },

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A computation produced a non-finite or out-of-range intermediate.
    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    /// An error raised while updating one lattice site.
    #[error("lattice site {site}: {source}")]
    AtSite { site: usize, source: Box<Error> },
}

impl Error {
    /// Innermost error, with any site wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtSite { source, .. } => source.root(),
            other => other,
        }
    }

    /// Wraps the error with the index of the lattice site that raised it.
    pub fn at_site(self, site: usize) -> Error {
        Error::AtSite { site, source: Box::new(self) }
    }

    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(self.root(), Error::Domain(_) | Error::Contract(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
