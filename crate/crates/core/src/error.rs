use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function or model.
    #[error("{name} = {value} is out of range: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The hypergeometric series would lose accuracy; use the quadrature route.
    #[error("2F1 argument {x} exceeds the series cutoff {cutoff}; use the quadrature fallback")]
    FallbackRequired { x: f64, cutoff: f64 },

    #[error("series did not converge after {terms} terms ({what})")]
    SeriesNotConverged { what: &'static str, terms: usize },

    #[error(
        "adaptive quadrature failed to reach tolerance {tolerance:e}: \
         worst subinterval [{lower}, {upper}] has error estimate {error:e}"
    )]
    Quadrature {
        lower: f64,
        upper: f64,
        error: f64,
        tolerance: f64,
    },

    #[error(
        "Cholesky factorisation failed for H = {hurst}, lambda = {lambda} on grid \
         [0, {t_max}] with {n_steps} steps (pivot {pivot}) after jitter {jitter:e}"
    )]
    Factorization {
        hurst: f64,
        lambda: f64,
        t_max: f64,
        n_steps: usize,
        pivot: usize,
        jitter: f64,
    },

    #[error("path has {got} samples but the grid has {expected} nodes")]
    GridMismatch { expected: usize, got: usize },

    #[error("noise path must start at 0, found {0}")]
    PathOrigin(f64),

    #[error("degenerate least-squares denominator {denominator:e} (threshold {threshold:e}); path is constant")]
    DegenerateDenominator { denominator: f64, threshold: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("replication {replication} at horizon {horizon}: {source}")]
    Replication {
        horizon: f64,
        replication: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for errors caused by bad user input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Domain { .. } | Error::Config(_) | Error::GridMismatch { .. } | Error::PathOrigin(_) => true,
            Error::Replication { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            reason: "must be finite",
        })
    }
}
